#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace caviar {

// Daily price observations, sorted ascending by date. Dates are opaque
// ISO-8601 labels (YYYY-MM-DD); no calendar arithmetic is done on them.
struct PriceSeries {
    std::vector<std::string> dates;
    std::vector<double> prices;

    std::size_t size() const { return prices.size(); }
};

// Scaled log returns, 100 * d(ln price), with an in-sample/out-of-sample
// split. split_index counts in-sample observations.
struct ReturnSeries {
    std::vector<std::string> dates;
    std::vector<double> returns;
    std::size_t split_index = 0;

    std::size_t size() const { return returns.size(); }
    std::size_t in_sample_size() const { return split_index; }
    std::size_t out_of_sample_size() const { return returns.size() - split_index; }

    std::vector<double> in_sample() const {
        return {returns.begin(), returns.begin() + static_cast<std::ptrdiff_t>(split_index)};
    }
    std::vector<double> out_of_sample() const {
        return {returns.begin() + static_cast<std::ptrdiff_t>(split_index), returns.end()};
    }
};

// Column mapping for CSV ingestion. value_mode selects whether value_column
// holds prices or pre-computed returns.
struct CsvSchema {
    enum class ValueMode { Price, Return };
    std::string date_column = "date";
    std::string value_column = "price";
    ValueMode value_mode = ValueMode::Price;
};

// Parses a headered CSV into a PriceSeries (schema must be in Price mode).
// Rows are sorted ascending by date; duplicate dates, non-positive prices
// and malformed rows are rejected with the offending row number.
PriceSeries load_csv(const std::string& path, const CsvSchema& schema);

// Same ingestion path for a pre-computed return column (Return mode);
// split_index defaults to the full length.
ReturnSeries load_returns_csv(const std::string& path, const CsvSchema& schema);

// returns[i] = 100 * (ln p[i+1] - ln p[i]); dates take the later endpoint.
ReturnSeries to_returns(const PriceSeries& p);

// Copy of r with split_index = in_sample. Requires 1 <= in_sample <= length.
ReturnSeries split(const ReturnSeries& r, std::size_t in_sample);

}  // namespace caviar
