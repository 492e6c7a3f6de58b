#include "spinlab/io.hpp"

#include "spinlab/errors.hpp"

#include <json.hpp>

#include <bit>
#include <cstdio>
#include <fstream>

namespace spinlab {

static_assert(std::endian::native == std::endian::little,
              "raw float dumps assume a little-endian host");

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // prefer the shortest representation that round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char probe[40];
        std::snprintf(probe, sizeof probe, "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(probe, "%lf", &back);
        if (back == v) return probe;
    }
    return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
    if (header_.empty()) throw ValidationError("CsvTable: empty header");
}

void CsvTable::add_row(const std::vector<std::string>& cells) {
    if (cells.size() != header_.size())
        throw ValidationError("CsvTable: row width does not match header");
    rows_.push_back(cells);
}

void CsvTable::add_row_values(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_double(v));
    add_row(cells);
}

std::string CsvTable::to_string() const {
    std::string out;
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (i) out += ',';
        out += header_[i];
    }
    out += '\n';
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += row[i];
        }
        out += '\n';
    }
    return out;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw NumericalError("atomic_write: cannot open " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw NumericalError("atomic_write: short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

void save_batch_raw(const SampleBatch& batch, const std::filesystem::path& path,
                    int n, std::uint64_t seed, const std::string& config_json) {
    std::string bytes;
    bytes.resize(static_cast<std::size_t>(batch.draws.size()) * sizeof(double));
    // row-major: sample after sample
    double* out = reinterpret_cast<double*>(bytes.data());
    for (long t = 0; t < batch.draws.rows(); ++t)
        for (long j = 0; j < batch.draws.cols(); ++j) *out++ = batch.draws(t, j);
    atomic_write(path, bytes);

    nlohmann::json sidecar;
    sidecar["n"] = n;
    sidecar["samples"] = batch.draws.rows();
    sidecar["dim"] = batch.draws.cols();
    sidecar["seed"] = seed;
    sidecar["config"] = nlohmann::json::parse(config_json.empty() ? "{}" : config_json);
    std::filesystem::path side = path;
    side += ".json";
    atomic_write(side, sidecar.dump(2) + "\n");
}

} // namespace spinlab
