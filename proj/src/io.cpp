#include "surfkern/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include "json.hpp"
#include "surfkern/errors.hpp"

namespace surfkern {

std::string format_double(double value) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view text) {
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw ShapeError("cannot parse number '" + std::string(text) + "'");
    }
    return value;
}

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::string> split_csv_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        fields.emplace_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

namespace {

template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) fn(line, line_no);
        ++line_no;
        start = end + 1;
    }
}

std::size_t parse_index(std::string_view text) {
    std::size_t value = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw ShapeError("cannot parse index '" + std::string(text) + "'");
    }
    return value;
}

}  // namespace

std::string model_record_line(const ModelRecord& record) {
    // Hand-assembled so every Vs keeps its shortest round-trip representation.
    std::string line = "{\"seed\":" + std::to_string(record.seed) + ",\"prior\":\"" +
                       std::string(to_string(record.prior)) + "\",\"vs\":[";
    const auto vs = record.model.vs();
    for (std::size_t i = 0; i < vs.size(); ++i) {
        line += format_double(vs[i]);
        line += ',';
    }
    line += format_double(record.model.halfspace_vs());
    line += "]}";
    return line;
}

ModelRecord parse_model_record(std::string_view line, const DepthGrid& grid) {
    try {
        const auto j = nlohmann::json::parse(line);
        ModelRecord r;
        r.seed = j.at("seed").get<std::uint64_t>();
        r.prior = prior_kind_from_string(j.at("prior").get<std::string>());
        auto vs = j.at("vs").get<std::vector<double>>();
        if (vs.size() != grid.size() + 1) {
            throw ShapeError("model record has " + std::to_string(vs.size()) + " Vs values, expected " +
                             std::to_string(grid.size() + 1));
        }
        const double hs = vs.back();
        vs.pop_back();
        r.model = LayeredModel(grid, std::move(vs), hs);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ShapeError(std::string("malformed model record: ") + e.what());
    }
}

std::string models_to_ndjson(std::span<const ModelRecord> records) {
    std::string out;
    for (const auto& r : records) {
        out += model_record_line(r);
        out += '\n';
    }
    return out;
}

std::vector<ModelRecord> models_from_ndjson(const std::string& text, const DepthGrid& grid) {
    std::vector<ModelRecord> out;
    for_each_line(text, [&](std::string_view line, std::size_t) {
        out.push_back(parse_model_record(line, grid));
    });
    return out;
}

void append_curve_rows(std::string& out, std::size_t model_index, const DispersionCurve& curve) {
    const std::string prefix = std::to_string(model_index) + "," + std::string(to_string(curve.wave)) + ",";
    for (std::size_t i = 0; i < curve.periods.size(); ++i) {
        out += prefix;
        out += format_double(curve.periods[i]);
        out += ',';
        out += format_double(curve.phase_velocity[i]);
        out += curve.mask[i] ? ",1\n" : ",0\n";
    }
}

std::vector<IndexedCurve> curves_from_csv(const std::string& text) {
    struct Partial {
        std::vector<double> periods, velocity;
        std::vector<std::uint8_t> mask;
    };
    std::vector<std::pair<std::size_t, WaveType>> order;
    std::map<std::pair<std::size_t, WaveType>, Partial> parts;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (line_no == 0) {
            if (line != kCurveCsvHeader) throw ShapeError("unexpected dispersion CSV header");
            return;
        }
        const auto f = split_csv_line(line);
        if (f.size() != 5) throw ShapeError("dispersion CSV row needs 5 fields");
        const std::pair key{parse_index(f[0]), wave_type_from_string(f[1])};
        auto [it, inserted] = parts.try_emplace(key);
        if (inserted) order.push_back(key);
        it->second.periods.push_back(parse_double(f[2]));
        it->second.velocity.push_back(parse_double(f[3]));
        it->second.mask.push_back(f[4] == "1" ? 1 : 0);
    });
    std::vector<IndexedCurve> out;
    out.reserve(order.size());
    for (const auto& key : order) {
        auto& p = parts.at(key);
        IndexedCurve c;
        c.model_index = key.first;
        c.curve.wave = key.second;
        c.curve.periods = PeriodGrid(std::move(p.periods));
        c.curve.phase_velocity = std::move(p.velocity);
        c.curve.mask = std::move(p.mask);
        out.push_back(std::move(c));
    }
    return out;
}

void append_kernel_rows(std::string& out, std::size_t model_index, const KernelMatrix& km) {
    const std::string prefix = std::to_string(model_index) + "," + std::string(to_string(km.wave)) + ",";
    for (std::size_t p = 0; p < km.rows.size(); ++p) {
        const std::string period = format_double(km.periods[p]);
        for (std::size_t i = 0; i < km.rows[p].size(); ++i) {
            out += prefix;
            out += period;
            out += ',';
            out += std::to_string(i);
            out += ',';
            out += format_double(km.grid.top(i));
            out += ',';
            out += format_double(km.rows[p][i]);
            out += '\n';
        }
    }
}

std::vector<IndexedKernels> kernels_from_csv(const std::string& text, const DepthGrid& grid) {
    struct Partial {
        std::vector<double> periods;
        std::vector<std::vector<double>> rows;
    };
    std::vector<std::pair<std::size_t, WaveType>> order;
    std::map<std::pair<std::size_t, WaveType>, Partial> parts;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (line_no == 0) {
            if (line != kKernelCsvHeader) throw ShapeError("unexpected kernel CSV header");
            return;
        }
        const auto f = split_csv_line(line);
        if (f.size() != 6) throw ShapeError("kernel CSV row needs 6 fields");
        const std::pair key{parse_index(f[0]), wave_type_from_string(f[1])};
        auto [it, inserted] = parts.try_emplace(key);
        if (inserted) order.push_back(key);
        Partial& p = it->second;
        const double period = parse_double(f[2]);
        const std::size_t layer = parse_index(f[3]);
        if (layer >= grid.size()) throw ShapeError("kernel layer index outside the depth grid");
        if (p.periods.empty() || p.periods.back() != period) {
            p.periods.push_back(period);
            p.rows.emplace_back(grid.size(), 0.0);
        }
        p.rows.back()[layer] = parse_double(f[5]);
    });
    std::vector<IndexedKernels> out;
    out.reserve(order.size());
    for (const auto& key : order) {
        auto& p = parts.at(key);
        IndexedKernels k;
        k.model_index = key.first;
        k.kernels.wave = key.second;
        k.kernels.periods = PeriodGrid(std::move(p.periods));
        k.kernels.grid = grid;
        k.kernels.rows = std::move(p.rows);
        out.push_back(std::move(k));
    }
    return out;
}

}  // namespace surfkern
