#include "defersim/dataset.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "defersim/errors.hpp"

namespace defersim {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_double(const std::string& s, long line_no) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ParseError("bad numeric field '" + s + "'", line_no);
    return v;
}

long parse_long(const std::string& s, long line_no) {
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ParseError("bad integer field '" + s + "'", line_no);
    return v;
}

}  // namespace

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file: " + path);

    std::string line;
    long line_no = 0;

    // Header: id, group, label, f1..fn
    if (!std::getline(in, line)) throw ConfigError("empty dataset file: " + path);
    ++line_no;
    auto header = split_csv(line);
    if (header.size() < 4 || header[0] != "id" || header[1] != "group" || header[2] != "label")
        throw ParseError("expected header 'id,group,label,f1,..'", line_no);
    const size_t dim = header.size() - 3;

    struct RawRow {
        long id;
        std::string group;
        int label;
        std::vector<double> features;
    };
    std::vector<RawRow> rows;
    std::vector<std::string> group_names;

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        RawRow r;
        r.id = parse_long(fields[0], line_no);
        r.group = fields[1];
        if (r.group.empty()) throw ParseError("empty group name", line_no);
        long label = parse_long(fields[2], line_no);
        if (label != 0 && label != 1) throw ParseError("label must be 0 or 1", line_no);
        r.label = static_cast<int>(label);
        r.features.reserve(dim);
        for (size_t i = 3; i < fields.size(); ++i)
            r.features.push_back(parse_double(fields[i], line_no));
        group_names.push_back(r.group);
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw ConfigError("dataset has a header but no rows: " + path);

    Dataset ds;
    ds.groups = GroupMap(std::move(group_names));
    ds.dim = dim;
    ds.samples.reserve(rows.size());
    for (auto& r : rows) {
        Sample s;
        s.id = r.id;
        s.group = ds.groups.id_of(r.group);
        s.true_label = r.label;
        s.features = std::move(r.features);
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

void save_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset file: " + path);
    out << "id,group,label";
    for (size_t i = 1; i <= ds.dim; ++i) out << ",f" << i;
    out << "\n";
    char buf[32];
    for (const auto& s : ds.samples) {
        out << s.id << ',' << ds.groups.name_of(s.group) << ',' << s.true_label;
        for (double f : s.features) {
            std::snprintf(buf, sizeof buf, "%.17g", f);
            out << ',' << buf;
        }
        out << "\n";
    }
    if (!out) throw IoError("write failure on: " + path);
}

}  // namespace defersim
