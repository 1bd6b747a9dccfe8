#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dropfilter/tensor.hpp"
#include "dropfilter/trainer.hpp"

namespace dropfilter {

// Raw IDX container (big-endian header: magic, extents; unsigned-byte payload).
struct IdxFile {
    std::uint32_t magic = 0;
    std::vector<std::uint32_t> dims;
    std::vector<std::uint8_t> payload;
};

constexpr std::uint32_t kIdxImageMagic = 2051; // 0x00000803, rank 3
constexpr std::uint32_t kIdxLabelMagic = 2049; // 0x00000801, rank 1

// Reads a plain or gzip-compressed IDX file. Malformed input (bad magic,
// truncated header or payload, extent/byte-count mismatch) -> FormatError
// naming the offending field.
IdxFile read_idx(const std::string& path);

// Writes an uncompressed IDX file (testing and synthetic-data use).
void write_idx(const std::string& path, std::uint32_t magic,
               const std::vector<std::uint32_t>& dims, const std::vector<std::uint8_t>& payload);

// images -> (N, 1, H, W), raw bytes scaled to [0,1] by 1/255
Tensor load_idx_images(const std::string& path);
// labels -> values validated to lie in [0,9]
std::vector<int> load_idx_labels(const std::string& path);

struct MnistPaths {
    std::string train_images, train_labels, test_images, test_labels;
};

// Resolves the four canonical MNIST files under data_dir, accepting plain or
// .gz names. Missing files -> FormatError listing every path that was tried.
MnistPaths locate_mnist(const std::string& data_dir);

struct MnistData {
    Dataset train, test;
};

MnistData load_mnist(const std::string& data_dir);

// Fetches the four canonical .gz files from base_url into data_dir
// (run_experiment only does this when explicitly asked).
void fetch_mnist(const std::string& data_dir, const std::string& base_url);

// --data-dir fallback chain: explicit value, DROPFILTER_DATA_DIR, ./data/mnist
std::string resolve_data_dir(const std::string& cli_value);

} // namespace dropfilter
