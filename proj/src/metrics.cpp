#include "ivnsim/metrics.hpp"

#include "ivnsim/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>

namespace ivnsim {

SeriesId MetricStore::series(std::string_view module_path, std::string_view name)
{
    Key key{std::string(module_path), std::string(name)};
    if (auto it = series_index_.find(key); it != series_index_.end()) {
        return it->second;
    }
    const SeriesId id = series_.size();
    series_.push_back(VectorSeries{key.first, key.second, {}});
    series_index_.emplace(std::move(key), id);
    return id;
}

void MetricStore::append(SeriesId id, SimTime t, double value)
{
    auto& s = series_.at(id);
    if (!s.points.empty() && t < s.points.back().first) {
        throw InvalidArgument("vector '" + s.module_path + "." + s.name + "' timestamps must be non-decreasing");
    }
    s.points.emplace_back(t, value);
}

void MetricStore::set_scalar(std::string_view module_path, std::string_view name, double value, std::string_view unit)
{
    Key key{std::string(module_path), std::string(name)};
    scalars_[key] = ScalarResult{key.first, key.second, value, std::string(unit)};
}

void MetricStore::add_scalar(std::string_view module_path, std::string_view name, double delta, std::string_view unit)
{
    Key key{std::string(module_path), std::string(name)};
    auto [it, inserted] = scalars_.try_emplace(key, ScalarResult{key.first, key.second, 0.0, std::string(unit)});
    it->second.value += delta;
}

const VectorSeries* MetricStore::find_vector(std::string_view module_path, std::string_view name) const
{
    auto it = series_index_.find(Key{std::string(module_path), std::string(name)});
    return it == series_index_.end() ? nullptr : &series_[it->second];
}

const ScalarResult* MetricStore::find_scalar(std::string_view module_path, std::string_view name) const
{
    auto it = scalars_.find(Key{std::string(module_path), std::string(name)});
    return it == scalars_.end() ? nullptr : &it->second;
}

std::vector<const VectorSeries*> MetricStore::vectors() const
{
    std::vector<const VectorSeries*> out;
    out.reserve(series_index_.size());
    for (const auto& [key, id] : series_index_) {
        out.push_back(&series_[id]);
    }
    return out;
}

std::vector<const ScalarResult*> MetricStore::scalars() const
{
    std::vector<const ScalarResult*> out;
    out.reserve(scalars_.size());
    for (const auto& [key, s] : scalars_) {
        out.push_back(&s);
    }
    return out;
}

double utilized_bandwidth(const VectorSeries& tx_bits, SimTime t0, SimTime t1)
{
    if (t1 <= t0) {
        throw InvalidArgument("bandwidth window must satisfy t1 > t0");
    }
    const auto& pts = tx_bits.points;
    auto lo = std::upper_bound(pts.begin(), pts.end(), t0,
                               [](SimTime t, const auto& p) { return t < p.first; });
    auto hi = std::upper_bound(pts.begin(), pts.end(), t1,
                               [](SimTime t, const auto& p) { return t < p.first; });
    double bits = 0.0;
    for (auto it = lo; it != hi; ++it) {
        bits += it->second;
    }
    return bits / (t1 - t0).seconds();
}

SimTime jitter(std::span<const SimTime> latencies)
{
    SimTime worst{};
    for (std::size_t i = 1; i < latencies.size(); ++i) {
        SimTime d = latencies[i] - latencies[i - 1];
        if (d < SimTime::zero()) {
            d = SimTime::zero() - d;
        }
        worst = std::max(worst, d);
    }
    return worst;
}

std::optional<SimTime> jitter(std::span<const LatencySample> samples)
{
    if (samples.empty()) {
        return SimTime::zero();
    }
    const auto origin = samples.front().origin;
    std::vector<SimTime> lat;
    lat.reserve(samples.size());
    for (const auto& s : samples) {
        if (s.origin != origin) {
            return std::nullopt;
        }
        lat.push_back(s.latency());
    }
    return jitter(std::span<const SimTime>(lat));
}

QueueRecorder::QueueRecorder(MetricStore* store, std::string module_path, std::string queue_name, bool record_vector)
    : store_(store), module_(std::move(module_path)), queue_(std::move(queue_name))
{
    if (store_ && record_vector) {
        series_ = store_->series(module_, "QueueLength[" + queue_ + "]");
    }
}

void QueueRecorder::record(QueueEvent ev, SimTime now)
{
    switch (ev) {
    case QueueEvent::Enqueue:
        ++occupancy_;
        peak_ = std::max(peak_, occupancy_);
        break;
    case QueueEvent::Dequeue:
        if (occupancy_ == 0) {
            throw InternalConsistency("dequeue from empty queue " + module_ + "." + queue_);
        }
        --occupancy_;
        break;
    case QueueEvent::Drop:
        ++drops_;
        if (store_) {
            store_->add_scalar(module_, "drops[" + queue_ + "]", 1.0, "frames");
        }
        break;
    }
    if (store_ && series_) {
        store_->append(*series_, now, occupancy_);
    }
}

std::optional<ExportFormat> parse_export_format(std::string_view s)
{
    if (s == "csv") {
        return ExportFormat::Csv;
    }
    if (s == "structured" || s == "json") {
        return ExportFormat::Structured;
    }
    return std::nullopt;
}

std::string format_value(double v)
{
    if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 9.007199254740992e15) {
        return std::to_string(static_cast<long long>(v));
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

namespace {

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

void write_file(const std::filesystem::path& p, const std::string& content)
{
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw IoError("cannot open " + p.string() + " for writing");
    }
    os << content;
    if (!os) {
        throw IoError("write failed: " + p.string());
    }
}

} // namespace

std::vector<std::filesystem::path> export_metrics(const MetricStore& store, ExportFormat format,
                                                  const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }
    std::vector<std::filesystem::path> files;
    if (format == ExportFormat::Csv) {
        for (const auto* v : store.vectors()) {
            std::string body = "time_ps,value\n";
            body.reserve(body.size() + v->points.size() * 24);
            for (const auto& [t, val] : v->points) {
                body += std::to_string(t.ticks());
                body += ',';
                body += format_value(val);
                body += '\n';
            }
            auto p = dir / (v->module_path + "." + v->name + ".csv");
            write_file(p, body);
            files.push_back(std::move(p));
        }
        std::string body = "module,name,value,unit\n";
        for (const auto* s : store.scalars()) {
            body += csv_field(s->module_path) + "," + csv_field(s->name) + "," + format_value(s->value) + "," +
                    csv_field(s->unit) + "\n";
        }
        auto p = dir / "scalars.csv";
        write_file(p, body);
        files.push_back(std::move(p));
        return files;
    }

    nlohmann::json doc;
    doc["format"] = "ivnsim-results";
    doc["version"] = 1;
    auto& vecs = doc["vectors"] = nlohmann::json::array();
    for (const auto* v : store.vectors()) {
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& [t, val] : v->points) {
            pts.push_back({t.ticks(), val});
        }
        vecs.push_back({{"module", v->module_path}, {"name", v->name}, {"points", std::move(pts)}});
    }
    auto& sc = doc["scalars"] = nlohmann::json::array();
    for (const auto* s : store.scalars()) {
        sc.push_back({{"module", s->module_path}, {"name", s->name}, {"value", s->value}, {"unit", s->unit}});
    }
    auto p = dir / "results.json";
    write_file(p, doc.dump(1) + "\n");
    files.push_back(std::move(p));
    return files;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                out.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                out.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back();
        } else {
            out.back() += c;
        }
    }
    return out;
}

template <typename T>
T parse_number(const std::string& s, const std::filesystem::path& file)
{
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw IoError("malformed number '" + s + "' in " + file.string());
    }
    return v;
}

std::ifstream open_read(const std::filesystem::path& p)
{
    std::ifstream is(p, std::ios::binary);
    if (!is) {
        throw IoError("cannot read " + p.string());
    }
    return is;
}

// "en2.rxLatency[msg1].csv" -> ("en2", "rxLatency[msg1]")
std::pair<std::string, std::string> split_vector_file(const std::string& stem)
{
    static const char* const prefixes[] = {"rxLatency[", "QueueLength[", "credit[",       "departure[",
                                           "txBits",     "poolResidence[", "drops["};
    for (std::size_t i = 0; i < stem.size(); ++i) {
        if (stem[i] != '.') {
            continue;
        }
        const std::string_view rest(stem.data() + i + 1, stem.size() - i - 1);
        for (const char* p : prefixes) {
            if (rest.starts_with(p)) {
                return {stem.substr(0, i), std::string(rest)};
            }
        }
    }
    const auto dot = stem.find('.');
    if (dot == std::string::npos) {
        return {"", stem};
    }
    return {stem.substr(0, dot), stem.substr(dot + 1)};
}

} // namespace

MetricStore load_metrics(const std::filesystem::path& dir)
{
    MetricStore store;
    if (!std::filesystem::is_directory(dir)) {
        throw IoError("no result directory " + dir.string());
    }
    const auto json_path = dir / "results.json";
    if (std::filesystem::exists(json_path)) {
        auto is = open_read(json_path);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(is);
            for (const auto& v : doc.at("vectors")) {
                const SeriesId id = store.series(v.at("module").get<std::string>(), v.at("name").get<std::string>());
                for (const auto& pt : v.at("points")) {
                    store.append(id, SimTime::ps(pt.at(0).get<std::int64_t>()), pt.at(1).get<double>());
                }
            }
            for (const auto& s : doc.at("scalars")) {
                store.set_scalar(s.at("module").get<std::string>(), s.at("name").get<std::string>(),
                                 s.at("value").get<double>(), s.at("unit").get<std::string>());
            }
        } catch (const nlohmann::json::exception& e) {
            throw IoError("malformed " + json_path.string() + ": " + e.what());
        }
        return store;
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        auto is = open_read(f);
        std::string line;
        std::getline(is, line);
        if (f.filename() == "scalars.csv") {
            while (std::getline(is, line)) {
                if (line.empty()) {
                    continue;
                }
                const auto cols = split_csv_line(line);
                if (cols.size() != 4) {
                    throw IoError("malformed row in " + f.string());
                }
                store.set_scalar(cols[0], cols[1], parse_number<double>(cols[2], f), cols[3]);
            }
            continue;
        }
        const auto [module, name] = split_vector_file(f.stem().string());
        const SeriesId id = store.series(module, name);
        while (std::getline(is, line)) {
            if (line.empty()) {
                continue;
            }
            const auto comma = line.find(',');
            if (comma == std::string::npos) {
                throw IoError("malformed row in " + f.string());
            }
            store.append(id, SimTime::ps(parse_number<std::int64_t>(line.substr(0, comma), f)),
                         parse_number<double>(line.substr(comma + 1), f));
        }
    }
    return store;
}

std::uint64_t hash_files(std::span<const std::filesystem::path> files)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& f : files) {
        std::ifstream is(f, std::ios::binary);
        if (!is) {
            throw IoError("cannot read " + f.string());
        }
        std::string name = f.filename().string();
        for (unsigned char c : name) {
            h = (h ^ c) * 1099511628211ULL;
        }
        std::istreambuf_iterator<char> it(is), end;
        for (; it != end; ++it) {
            h = (h ^ static_cast<unsigned char>(*it)) * 1099511628211ULL;
        }
    }
    return h;
}

} // namespace ivnsim
