#pragma once

// Trajectory files (long CSV and JSON), full-precision CSV tables, run hashes
// and atomic file writes.
//
// CSV layout:
//   # shapespline-trajectory k=4 m=3 n=2 mode=shape units=angstrom   (optional)
//   time,landmark,x,y,z
//   0,0,1.5,0.25,0
//   0,1,...
// A frame starts at landmark 0 and its landmarks are listed in order.

#include "shapespline/types.hpp"

#include "json.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace shapespline {

struct TrajectoryHeader
{
    int k = 0;
    int m = 0;
    int n = 0;
    Mode mode = Mode::shape;
    std::string units;
};

struct Trajectory
{
    TrajectoryHeader header;
    std::vector<Configuration> frames;
};

inline Mode parse_mode(std::string_view s)
{
    if (s == "shape")
        return Mode::shape;
    if (s == "size-and-shape" || s == "size_and_shape")
        return Mode::size_and_shape;
    throw Error(ErrorCode::InvalidArgument, "unknown mode '" + std::string(s) + "'");
}

/// Shortest round-trip decimal ("%.17g").
inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL)
{
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes to a sibling temporary file and renames it over `path`.
inline void atomic_write(const std::filesystem::path& path, std::string_view contents)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out)
            throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw Error(ErrorCode::IoError, "cannot rename " + tmp.string() + ": " + ec.message());
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos)
            return out;
        start = pos + 1;
    }
}

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::string where(std::size_t line, std::size_t column)
{
    return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

inline double parse_number(std::string_view field, std::size_t line, std::size_t column)
{
    field = trim(field);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size())
        throw Error(ErrorCode::ParseError, where(line, column) + ": '" + std::string(field) + "' is not a number");
    if (!std::isfinite(v))
        throw Error(ErrorCode::ValidationError, where(line, column) + ": non-finite value");
    return v;
}

inline void parse_header_comment(std::string_view line, TrajectoryHeader& h, std::size_t lineno)
{
    for (auto token : split(line, ' ')) {
        token = trim(token);
        const auto eq = token.find('=');
        if (eq == std::string_view::npos)
            continue;
        const auto key = token.substr(0, eq);
        const auto value = std::string(token.substr(eq + 1));
        try {
            if (key == "k")
                h.k = std::stoi(value);
            else if (key == "m")
                h.m = std::stoi(value);
            else if (key == "n")
                h.n = std::stoi(value);
            else if (key == "mode")
                h.mode = parse_mode(value);
            else if (key == "units")
                h.units = value;
        } catch (const std::logic_error&) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": bad header value for " +
                                                   std::string(key));
        }
    }
}

/// Shared checks for decoded trajectories; `label(i)` names frame i in messages.
template <class Label>
void validate_frames(const Trajectory& t, Label&& label)
{
    if (t.frames.empty())
        throw Error(ErrorCode::ValidationError, "trajectory has no frames");
    const auto k = t.frames.front().landmarks.rows();
    const auto m = t.frames.front().landmarks.cols();
    if (k <= m)
        throw Error(ErrorCode::ValidationError, "need more landmarks than dimensions (k=" + std::to_string(k) +
                                                    ", m=" + std::to_string(m) + ")");
    if (t.header.k && t.header.k != k)
        throw Error(ErrorCode::ValidationError, "header k does not match the records");
    if (t.header.m && t.header.m != m)
        throw Error(ErrorCode::ValidationError, "header m does not match the records");
    if (t.header.n && t.header.n != static_cast<int>(t.frames.size()))
        throw Error(ErrorCode::ValidationError, "header n=" + std::to_string(t.header.n) + " but " +
                                                    std::to_string(t.frames.size()) + " frames found");
    for (std::size_t i = 0; i < t.frames.size(); ++i) {
        const auto& f = t.frames[i];
        if (f.landmarks.rows() != k)
            throw Error(ErrorCode::ValidationError, label(i) + ": expected " + std::to_string(k) + " landmarks");
        if (!std::isfinite(f.time) || !f.landmarks.allFinite())
            throw Error(ErrorCode::ValidationError, label(i) + ": non-finite value");
        if (i > 0 && !(f.time > t.frames[i - 1].time))
            throw Error(ErrorCode::ValidationError, label(i) + ": time " + format_double(f.time) +
                                                        " does not increase");
    }
}

} // namespace detail

inline Trajectory parse_trajectory_csv(std::string_view text)
{
    Trajectory t;
    std::size_t lineno = 0;
    int m = -1;
    std::vector<std::size_t> frame_line;
    std::vector<std::vector<RowVector>> rows;

    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = text.find('\n', pos);
        std::string_view line = detail::trim(text.substr(pos, end == std::string_view::npos ? end : end - pos));
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++lineno;
        if (line.empty())
            continue;
        if (line.front() == '#') {
            if (line.find("shapespline-trajectory") != std::string_view::npos)
                detail::parse_header_comment(line, t.header, lineno);
            continue;
        }
        const auto fields = detail::split(line, ',');
        if (m < 0) {
            if (fields.size() < 3 || detail::trim(fields[0]) != "time" || detail::trim(fields[1]) != "landmark")
                throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) +
                                                       ": expected column header 'time,landmark,x,...'");
            m = static_cast<int>(fields.size()) - 2;
            continue;
        }
        if (static_cast<int>(fields.size()) != m + 2)
            throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected " +
                                                   std::to_string(m + 2) + " fields, got " +
                                                   std::to_string(fields.size()));
        const double time = detail::parse_number(fields[0], lineno, 1);
        const double lm = detail::parse_number(fields[1], lineno, 2);
        if (lm != std::floor(lm) || lm < 0)
            throw Error(ErrorCode::ParseError, detail::where(lineno, 2) + ": landmark index must be a nonnegative integer");
        const auto index = static_cast<std::size_t>(lm);
        RowVector p(m);
        for (int c = 0; c < m; ++c)
            p(c) = detail::parse_number(fields[static_cast<std::size_t>(c) + 2], lineno, static_cast<std::size_t>(c) + 3);

        if (index == 0) {
            t.frames.push_back({Matrix(), time});
            frame_line.push_back(lineno);
            rows.emplace_back();
        } else if (rows.empty() || index != rows.back().size()) {
            throw Error(ErrorCode::ParseError, detail::where(lineno, 2) + ": landmark " + std::to_string(index) +
                                                   " out of sequence");
        } else if (time != t.frames.back().time) {
            throw Error(ErrorCode::ParseError, detail::where(lineno, 1) + ": time changes within a frame");
        }
        rows.back().push_back(std::move(p));
    }
    if (m < 0)
        throw Error(ErrorCode::ParseError, "missing column header");
    for (std::size_t f = 0; f < t.frames.size(); ++f) {
        Matrix lm(static_cast<Eigen::Index>(rows[f].size()), m);
        for (std::size_t r = 0; r < rows[f].size(); ++r)
            lm.row(static_cast<Eigen::Index>(r)) = rows[f][r];
        t.frames[f].landmarks = std::move(lm);
    }
    detail::validate_frames(t, [&](std::size_t i) {
        return "record " + std::to_string(i + 1) + " (line " + std::to_string(frame_line[i]) + ")";
    });
    if (!t.header.k) {
        t.header.k = static_cast<int>(t.frames.front().landmarks.rows());
        t.header.m = m;
    }
    t.header.n = static_cast<int>(t.frames.size());
    return t;
}

/// x, y, z for m <= 3, otherwise x1..xm.
inline std::vector<std::string> coordinate_names(int m)
{
    std::vector<std::string> out;
    for (int c = 0; c < m; ++c)
        out.push_back(m <= 3 ? std::string(1, static_cast<char>('x' + c)) : "x" + std::to_string(c + 1));
    return out;
}

inline std::string write_trajectory_csv(const Trajectory& t)
{
    const auto& first = t.frames.front().landmarks;
    const int k = static_cast<int>(first.rows());
    const int m = static_cast<int>(first.cols());
    std::string out = "# shapespline-trajectory k=" + std::to_string(k) + " m=" + std::to_string(m) +
                      " n=" + std::to_string(t.frames.size()) + " mode=" + std::string(to_string(t.header.mode));
    if (!t.header.units.empty())
        out += " units=" + t.header.units;
    out += "\ntime,landmark";
    for (const auto& name : coordinate_names(m))
        out += "," + name;
    out += '\n';
    for (const auto& f : t.frames) {
        for (int r = 0; r < k; ++r) {
            out += format_double(f.time) + "," + std::to_string(r);
            for (int c = 0; c < m; ++c)
                out += "," + format_double(f.landmarks(r, c));
            out += '\n';
        }
    }
    return out;
}

inline nlohmann::json trajectory_to_json(const Trajectory& t)
{
    const auto& first = t.frames.front().landmarks;
    nlohmann::json j;
    j["format"] = "shapespline-trajectory";
    j["version"] = 1;
    j["k"] = first.rows();
    j["m"] = first.cols();
    j["n"] = t.frames.size();
    j["mode"] = std::string(to_string(t.header.mode));
    j["units"] = t.header.units;
    auto& frames = j["frames"] = nlohmann::json::array();
    for (const auto& f : t.frames) {
        nlohmann::json lm = nlohmann::json::array();
        for (Eigen::Index r = 0; r < f.landmarks.rows(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index c = 0; c < f.landmarks.cols(); ++c)
                row.push_back(f.landmarks(r, c));
            lm.push_back(std::move(row));
        }
        frames.push_back({{"time", f.time}, {"landmarks", std::move(lm)}});
    }
    return j;
}

inline Trajectory parse_trajectory_json(std::string_view text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError, std::string("invalid JSON: ") + e.what());
    }
    Trajectory t;
    try {
        if (j.value("format", std::string()) != "shapespline-trajectory")
            throw Error(ErrorCode::ParseError, "JSON is not a shapespline-trajectory document");
        t.header.k = j.value("k", 0);
        t.header.m = j.value("m", 0);
        t.header.n = j.value("n", 0);
        t.header.mode = parse_mode(j.value("mode", std::string("shape")));
        t.header.units = j.value("units", std::string());
        const auto& frames = j.at("frames");
        for (std::size_t i = 0; i < frames.size(); ++i) {
            const auto& f = frames[i];
            const auto& lm = f.at("landmarks");
            const auto k = static_cast<Eigen::Index>(lm.size());
            const auto m = k ? static_cast<Eigen::Index>(lm.at(0).size()) : 0;
            Matrix x(k, m);
            for (Eigen::Index r = 0; r < k; ++r) {
                if (static_cast<Eigen::Index>(lm[static_cast<std::size_t>(r)].size()) != m)
                    throw Error(ErrorCode::ParseError, "frame " + std::to_string(i + 1) + ": ragged landmark rows");
                for (Eigen::Index c = 0; c < m; ++c)
                    x(r, c) = lm[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
            }
            if (i > 0 && m != t.frames.front().landmarks.cols())
                throw Error(ErrorCode::ValidationError, "frame " + std::to_string(i + 1) + ": dimension changes");
            t.frames.push_back({std::move(x), f.at("time").get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("malformed trajectory JSON: ") + e.what());
    }
    detail::validate_frames(t, [](std::size_t i) { return "frame " + std::to_string(i + 1); });
    t.header.n = static_cast<int>(t.frames.size());
    return t;
}

/// Dispatches on the file extension (.json, anything else is CSV).
inline Trajectory read_trajectory(const std::filesystem::path& path)
{
    const auto text = read_file(path);
    return path.extension() == ".json" ? parse_trajectory_json(text) : parse_trajectory_csv(text);
}

inline void write_trajectory(const std::filesystem::path& path, const Trajectory& t)
{
    if (t.frames.empty())
        throw Error(ErrorCode::InvalidArgument, "cannot write an empty trajectory");
    atomic_write(path, path.extension() == ".json" ? trajectory_to_json(t).dump(2) + "\n" : write_trajectory_csv(t));
}

/// Plain numeric table with a header row and an optional leading comment.
class CsvTable
{
public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void comment(const std::string& text) { comments_.push_back(text); }

    void add(const std::vector<std::string>& fields)
    {
        if (fields.size() != columns_.size())
            throw Error(ErrorCode::InvalidArgument, "CSV row width does not match the header");
        rows_.push_back(fields);
    }

    std::string str() const
    {
        std::string out;
        for (const auto& c : comments_)
            out += "# " + c + "\n";
        auto line = [&](const std::vector<std::string>& fields) {
            for (std::size_t i = 0; i < fields.size(); ++i)
                out += (i ? "," : "") + fields[i];
            out += '\n';
        };
        line(columns_);
        for (const auto& r : rows_)
            line(r);
        return out;
    }

private:
    std::vector<std::string> columns_;
    std::vector<std::string> comments_;
    std::vector<std::vector<std::string>> rows_;
};

} // namespace shapespline
