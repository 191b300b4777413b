#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "surfkern/dispersion.hpp"
#include "surfkern/earth_model.hpp"
#include "surfkern/reference_kernels.hpp"

namespace surfkern {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
/// Throws IoError when the file cannot be written.
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Splits one CSV line on commas (no quoting; none of our fields need it).
std::vector<std::string> split_csv_line(std::string_view line);

// --- model ensembles: one JSON object per line ------------------------------

struct ModelRecord {
    std::uint64_t seed = 0;
    PriorKind prior = PriorKind::weak;
    LayeredModel model;
};

std::string model_record_line(const ModelRecord& record);
ModelRecord parse_model_record(std::string_view line, const DepthGrid& grid);
std::string models_to_ndjson(std::span<const ModelRecord> records);
std::vector<ModelRecord> models_from_ndjson(const std::string& text, const DepthGrid& grid);

// --- dispersion curves: model_index,wave,period_s,phase_velocity_km_s,mask ----

inline constexpr std::string_view kCurveCsvHeader =
    "model_index,wave,period_s,phase_velocity_km_s,mask";

void append_curve_rows(std::string& out, std::size_t model_index, const DispersionCurve& curve);

struct IndexedCurve {
    std::size_t model_index = 0;
    DispersionCurve curve;
};

/// Groups rows by (model_index, wave) in file order.
std::vector<IndexedCurve> curves_from_csv(const std::string& text);

// --- kernels: model_index,wave,period_s,layer_index,layer_top_km,kernel_value --

inline constexpr std::string_view kKernelCsvHeader =
    "model_index,wave,period_s,layer_index,layer_top_km,kernel_value";

void append_kernel_rows(std::string& out, std::size_t model_index, const KernelMatrix& km);

struct IndexedKernels {
    std::size_t model_index = 0;
    KernelMatrix kernels;
};

std::vector<IndexedKernels> kernels_from_csv(const std::string& text, const DepthGrid& grid);

}  // namespace surfkern
