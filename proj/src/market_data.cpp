#include "caviar/market_data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace caviar {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    std::istringstream ls(line);
    while (std::getline(ls, cur, ',')) {
        // trim surrounding whitespace, including a trailing CR
        std::size_t b = 0, e = cur.size();
        while (b < e && std::isspace(static_cast<unsigned char>(cur[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(cur[e - 1]))) --e;
        fields.push_back(cur.substr(b, e - b));
    }
    return fields;
}

bool looks_like_iso_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    }
    return true;
}

struct RawRows {
    std::vector<std::string> dates;
    std::vector<double> values;
};

RawRows read_rows(const std::string& path, const CsvSchema& schema) {
    std::ifstream ifs(path);
    if (!ifs.is_open()) {
        throw std::runtime_error("cannot open CSV file: " + path);
    }

    std::string line;
    if (!std::getline(ifs, line)) {
        throw std::runtime_error("empty CSV file (header row required): " + path);
    }
    const auto header = split_fields(line);
    const auto find_col = [&](const std::string& name) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw std::runtime_error("column '" + name + "' not found in " + path);
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t date_idx = find_col(schema.date_column);
    const std::size_t value_idx = find_col(schema.value_column);

    RawRows rows;
    std::size_t line_no = 1;
    while (std::getline(ifs, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_fields(line);
        if (fields.size() <= std::max(date_idx, value_idx)) {
            throw std::runtime_error("row " + std::to_string(line_no) + ": too few fields");
        }
        const std::string& date = fields[date_idx];
        if (!looks_like_iso_date(date)) {
            throw std::runtime_error("row " + std::to_string(line_no) +
                                     ": date not in YYYY-MM-DD form: '" + date + "'");
        }
        double value;
        try {
            std::size_t pos = 0;
            value = std::stod(fields[value_idx], &pos);
            if (pos != fields[value_idx].size()) throw std::invalid_argument("trailing chars");
        } catch (const std::exception&) {
            throw std::runtime_error("row " + std::to_string(line_no) +
                                     ": cannot parse value '" + fields[value_idx] + "'");
        }
        rows.dates.push_back(date);
        rows.values.push_back(value);
    }
    if (rows.dates.empty()) {
        throw std::runtime_error("no data rows in " + path);
    }

    // sort ascending by date, then reject duplicates
    std::vector<std::size_t> order(rows.dates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rows.dates[a] < rows.dates[b]; });
    RawRows sorted;
    sorted.dates.reserve(order.size());
    sorted.values.reserve(order.size());
    for (std::size_t i : order) {
        if (!sorted.dates.empty() && sorted.dates.back() == rows.dates[i]) {
            throw std::runtime_error("duplicate date: " + rows.dates[i]);
        }
        sorted.dates.push_back(rows.dates[i]);
        sorted.values.push_back(rows.values[i]);
    }
    return sorted;
}

}  // namespace

PriceSeries load_csv(const std::string& path, const CsvSchema& schema) {
    if (schema.value_mode != CsvSchema::ValueMode::Price) {
        throw std::invalid_argument("load_csv: schema must be in Price mode");
    }
    auto rows = read_rows(path, schema);
    for (std::size_t i = 0; i < rows.values.size(); ++i) {
        if (!(rows.values[i] > 0.0)) {
            throw std::runtime_error("non-positive price " + std::to_string(rows.values[i]) +
                                     " at date " + rows.dates[i]);
        }
    }
    if (rows.values.size() < 2) {
        throw std::runtime_error("price series needs at least 2 observations");
    }
    return PriceSeries{std::move(rows.dates), std::move(rows.values)};
}

ReturnSeries load_returns_csv(const std::string& path, const CsvSchema& schema) {
    if (schema.value_mode != CsvSchema::ValueMode::Return) {
        throw std::invalid_argument("load_returns_csv: schema must be in Return mode");
    }
    auto rows = read_rows(path, schema);
    ReturnSeries r;
    r.dates = std::move(rows.dates);
    r.returns = std::move(rows.values);
    r.split_index = r.returns.size();
    return r;
}

ReturnSeries to_returns(const PriceSeries& p) {
    if (p.size() < 2) {
        throw std::invalid_argument("to_returns: need at least 2 prices, got " +
                                    std::to_string(p.size()));
    }
    ReturnSeries r;
    r.dates.assign(p.dates.begin() + 1, p.dates.end());
    r.returns.resize(p.size() - 1);
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        r.returns[i] = 100.0 * (std::log(p.prices[i + 1]) - std::log(p.prices[i]));
    }
    r.split_index = r.returns.size();
    return r;
}

ReturnSeries split(const ReturnSeries& r, std::size_t in_sample) {
    if (in_sample < 1 || in_sample > r.size()) {
        throw std::invalid_argument("split: in_sample count " + std::to_string(in_sample) +
                                    " out of range for length " + std::to_string(r.size()));
    }
    ReturnSeries out = r;
    out.split_index = in_sample;
    return out;
}

}  // namespace caviar
