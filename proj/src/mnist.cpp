#include "dropfilter/mnist.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <zlib.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace dropfilter {

namespace {

std::vector<std::uint8_t> read_all_bytes(const std::string& path) {
    // gzread passes uncompressed data through untouched, so one code path
    // covers both plain and .gz files
    gzFile f = gzopen(path.c_str(), "rb");
    if (f == nullptr) throw FormatError("cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes;
    std::uint8_t buf[1 << 16];
    int got = 0;
    while ((got = gzread(f, buf, sizeof(buf))) > 0) {
        bytes.insert(bytes.end(), buf, buf + got);
    }
    const bool read_error = got < 0;
    gzclose(f);
    if (read_error) throw FormatError("read/decompress failure in '" + path + "'");
    return bytes;
}

std::uint32_t be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) |
           std::uint32_t(p[3]);
}

std::string find_existing(const std::string& dir, const std::string& stem,
                          std::vector<std::string>& tried) {
    namespace fs = std::filesystem;
    for (const std::string& name : {stem, stem + ".gz"}) {
        const std::string path = (fs::path(dir) / name).string();
        if (fs::exists(path)) return path;
        tried.push_back(path);
    }
    return {};
}

} // namespace

IdxFile read_idx(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_all_bytes(path);
    if (bytes.size() < 4) throw FormatError("'" + path + "': truncated magic field");
    IdxFile idx;
    idx.magic = be32(bytes.data());
    if (bytes[0] != 0 || bytes[1] != 0) {
        throw FormatError("'" + path + "': bad magic " + std::to_string(idx.magic) +
                          " (leading bytes must be zero)");
    }
    if (bytes[2] != 0x08) {
        throw FormatError("'" + path + "': bad magic data-type byte " + std::to_string(bytes[2]) +
                          " (only unsigned byte 0x08 supported)");
    }
    const std::size_t rank = bytes[3];
    if (rank == 0 || rank > 4) {
        throw FormatError("'" + path + "': bad magic rank byte " + std::to_string(rank));
    }
    if (bytes.size() < 4 + 4 * rank) {
        throw FormatError("'" + path + "': truncated extents field");
    }
    std::size_t count = 1;
    for (std::size_t i = 0; i < rank; ++i) {
        const std::uint32_t e = be32(bytes.data() + 4 + 4 * i);
        if (e == 0) throw FormatError("'" + path + "': zero extent in dimension " + std::to_string(i));
        idx.dims.push_back(e);
        count *= e;
    }
    const std::size_t payload = bytes.size() - 4 - 4 * rank;
    if (payload != count) {
        throw FormatError("'" + path + "': extent mismatch, header promises " +
                          std::to_string(count) + " bytes but payload has " +
                          std::to_string(payload));
    }
    idx.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(4 + 4 * rank), bytes.end());
    return idx;
}

void write_idx(const std::string& path, std::uint32_t magic,
               const std::vector<std::uint32_t>& dims, const std::vector<std::uint8_t>& payload) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    auto put32 = [&](std::uint32_t v) {
        const std::uint8_t b[4] = {std::uint8_t(v >> 24), std::uint8_t(v >> 16),
                                   std::uint8_t(v >> 8), std::uint8_t(v)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };
    put32(magic);
    for (std::uint32_t d : dims) put32(d);
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    if (!out) throw FormatError("write failure on '" + path + "'");
}

Tensor load_idx_images(const std::string& path) {
    const IdxFile idx = read_idx(path);
    if (idx.magic != kIdxImageMagic) {
        throw FormatError("'" + path + "': bad magic " + std::to_string(idx.magic) +
                          ", expected image magic " + std::to_string(kIdxImageMagic));
    }
    if (idx.dims.size() != 3) {
        throw FormatError("'" + path + "': image file must have 3 extents");
    }
    const std::size_t n = idx.dims[0], h = idx.dims[1], w = idx.dims[2];
    Tensor images({n, 1, h, w});
    double* out = images.data();
    for (std::size_t i = 0; i < idx.payload.size(); ++i) {
        out[i] = static_cast<double>(idx.payload[i]) / 255.0;
    }
    return images;
}

std::vector<int> load_idx_labels(const std::string& path) {
    const IdxFile idx = read_idx(path);
    if (idx.magic != kIdxLabelMagic) {
        throw FormatError("'" + path + "': bad magic " + std::to_string(idx.magic) +
                          ", expected label magic " + std::to_string(kIdxLabelMagic));
    }
    if (idx.dims.size() != 1) {
        throw FormatError("'" + path + "': label file must have 1 extent");
    }
    std::vector<int> labels(idx.payload.size());
    for (std::size_t i = 0; i < idx.payload.size(); ++i) {
        if (idx.payload[i] > 9) {
            throw FormatError("'" + path + "': label value " + std::to_string(idx.payload[i]) +
                              " at index " + std::to_string(i) + " outside [0,9]");
        }
        labels[i] = idx.payload[i];
    }
    return labels;
}

MnistPaths locate_mnist(const std::string& data_dir) {
    std::vector<std::string> tried;
    MnistPaths paths;
    paths.train_images = find_existing(data_dir, "train-images-idx3-ubyte", tried);
    paths.train_labels = find_existing(data_dir, "train-labels-idx1-ubyte", tried);
    paths.test_images = find_existing(data_dir, "t10k-images-idx3-ubyte", tried);
    paths.test_labels = find_existing(data_dir, "t10k-labels-idx1-ubyte", tried);
    if (paths.train_images.empty() || paths.train_labels.empty() || paths.test_images.empty() ||
        paths.test_labels.empty()) {
        std::string msg = "MNIST files missing under '" + data_dir + "'; tried:";
        for (const std::string& t : tried) msg += "\n  " + t;
        msg += "\nPoint --data-dir (or DROPFILTER_DATA_DIR) at the IDX files, or pass --download.";
        throw FormatError(msg);
    }
    return paths;
}

MnistData load_mnist(const std::string& data_dir) {
    const MnistPaths paths = locate_mnist(data_dir);
    MnistData data;
    data.train.images = load_idx_images(paths.train_images);
    data.train.labels = load_idx_labels(paths.train_labels);
    data.test.images = load_idx_images(paths.test_images);
    data.test.labels = load_idx_labels(paths.test_labels);
    if (data.train.images.extent(0) != data.train.labels.size()) {
        throw FormatError("train image/label counts disagree (" +
                          std::to_string(data.train.images.extent(0)) + " vs " +
                          std::to_string(data.train.labels.size()) + ")");
    }
    if (data.test.images.extent(0) != data.test.labels.size()) {
        throw FormatError("test image/label counts disagree (" +
                          std::to_string(data.test.images.extent(0)) + " vs " +
                          std::to_string(data.test.labels.size()) + ")");
    }
    return data;
}

void fetch_mnist(const std::string& data_dir, const std::string& base_url) {
    std::string url = base_url;
    while (!url.empty() && url.back() == '/') url.pop_back();
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ValueError("mnist url must start with http:// or https://, got '" + base_url + "'");
    }
    const auto host_start = scheme_end + 3;
    const auto path_start = url.find('/', host_start);
    const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
    const std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);

    std::filesystem::create_directories(data_dir);
    httplib::Client client(origin);
    client.set_follow_location(true);
    client.set_connection_timeout(30);
    client.set_read_timeout(120);
    for (const char* stem :
         {"train-images-idx3-ubyte", "train-labels-idx1-ubyte", "t10k-images-idx3-ubyte",
          "t10k-labels-idx1-ubyte"}) {
        const std::string remote = prefix + "/" + stem + ".gz";
        auto res = client.Get(remote);
        if (!res || res->status != 200) {
            throw FormatError("download failed for " + origin + remote +
                              (res ? " (status " + std::to_string(res->status) + ")"
                                   : " (connection error)"));
        }
        const std::string local =
            (std::filesystem::path(data_dir) / (std::string(stem) + ".gz")).string();
        std::ofstream out(local, std::ios::binary | std::ios::trunc);
        out.write(res->body.data(), static_cast<std::streamsize>(res->body.size()));
        if (!out) throw FormatError("write failure on '" + local + "'");
    }
}

std::string resolve_data_dir(const std::string& cli_value) {
    if (!cli_value.empty()) return cli_value;
    if (const char* env = std::getenv("DROPFILTER_DATA_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return "data/mnist";
}

} // namespace dropfilter
