#pragma once

#include "spinlab/sampler.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace spinlab {

// Deterministic formatting: shortest round-trip representation via %.17g
// trimmed; CSV dialect is comma-separated, '.' decimal, LF endings, UTF-8.
std::string format_double(double v);

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);
    void add_row(const std::vector<std::string>& cells);
    void add_row_values(const std::vector<double>& values);
    std::string to_string() const; // header + rows, LF line endings
    long nrows() const { return static_cast<long>(rows_.size()); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

// temp-file-and-rename in the target directory; interrupted runs leave no
// partial outputs
void atomic_write(const std::filesystem::path& path, const std::string& content);

// draws as little-endian float64 raw bytes plus a JSON sidecar
// {n, samples, seed, config} at <path>.json
void save_batch_raw(const SampleBatch& batch, const std::filesystem::path& path,
                    int n, std::uint64_t seed, const std::string& config_json);

} // namespace spinlab
