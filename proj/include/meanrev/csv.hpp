#pragma once

#include <charconv>
#include <chrono>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ou_process.hpp"
#include "params.hpp"

namespace meanrev {

struct csv_table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

namespace detail {

// One RFC-4180 record; quoted fields may contain commas, quotes, newlines.
inline bool read_record(std::istream& in, std::vector<std::string>& out, std::size_t& line_no) {
    out.clear();
    std::string field;
    bool in_quotes = false, started = false;
    int ch;
    while ((ch = in.get()) != EOF) {
        started = true;
        const char c = static_cast<char>(ch);
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line_no;
                field.push_back(c);
            }
        } else if (c == '"') {
            if (!field.empty())
                throw input_error("csv: stray quote inside unquoted field at line " +
                                  std::to_string(line_no));
            in_quotes = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else if (c == '\r') {
            if (in.peek() == '\n') in.get();
            ++line_no;
            out.push_back(std::move(field));
            return true;
        } else if (c == '\n') {
            ++line_no;
            out.push_back(std::move(field));
            return true;
        } else {
            field.push_back(c);
        }
    }
    if (in_quotes) throw input_error("csv: unterminated quoted field at end of file");
    if (!started) return false;
    out.push_back(std::move(field));
    return true;
}

inline double parse_double(const std::string& s, std::size_t line_no) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc{} || res.ptr != e)
        throw input_error("csv: cannot parse number '" + s + "' at line " + std::to_string(line_no));
    return v;
}

inline bool iso_date_ok(const std::string& d) {
    if (d.size() != 10 || d[4] != '-' || d[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (d[i] < '0' || d[i] > '9') return false;
    const int y = std::stoi(d.substr(0, 4));
    const unsigned m = static_cast<unsigned>(std::stoi(d.substr(5, 2)));
    const unsigned day = static_cast<unsigned>(std::stoi(d.substr(8, 2)));
    return std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m},
                                       std::chrono::day{day}}
        .ok();
}

}  // namespace detail

inline csv_table read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("csv: cannot open '" + path + "'");
    csv_table t;
    std::size_t line_no = 1;
    std::vector<std::string> rec;
    if (!detail::read_record(in, rec, line_no))
        throw input_error("csv: '" + path + "' is empty");
    t.header = rec;
    std::size_t row_line = line_no;
    while (detail::read_record(in, rec, line_no)) {
        if (!(rec.size() == 1 && rec[0].empty())) {  // skip trailing blank line
            if (rec.size() != t.header.size())
                throw input_error("csv: row at line " + std::to_string(row_line) + " has " +
                                  std::to_string(rec.size()) + " fields, expected " +
                                  std::to_string(t.header.size()));
            t.rows.push_back(rec);
        }
        row_line = line_no;
    }
    return t;
}

namespace detail {

inline void check_dates(const std::vector<std::string>& dates) {
    std::string prev;
    std::size_t row = 2;
    for (const auto& d : dates) {
        if (!iso_date_ok(d))
            throw input_error("csv: bad ISO-8601 date '" + d + "' at line " + std::to_string(row));
        if (!prev.empty() && !(prev < d))
            throw input_error("csv: dates not strictly increasing at line " + std::to_string(row));
        prev = d;
        ++row;
    }
}

}  // namespace detail

// Expected header exactly: date,price. Rows are consecutive trading periods
// spaced dt apart in year units.
inline price_series read_price_series(const std::string& path, double dt = 1.0 / 252.0) {
    const auto t = read_csv(path);
    if (t.header != std::vector<std::string>{"date", "price"})
        throw input_error("csv: '" + path + "' must have header date,price");
    price_series s;
    s.dt = dt;
    std::size_t line_no = 2;
    for (const auto& row : t.rows) {
        s.dates.push_back(row[0]);
        s.values.push_back(detail::parse_double(row[1], line_no));
        ++line_no;
    }
    detail::check_dates(s.dates);
    s.validate();
    return s;
}

// Expected header exactly: date,price1,price2.
inline std::pair<price_series, price_series> read_price_pair(const std::string& path,
                                                             double dt = 1.0 / 252.0) {
    const auto t = read_csv(path);
    if (t.header != std::vector<std::string>{"date", "price1", "price2"})
        throw input_error("csv: '" + path + "' must have header date,price1,price2");
    price_series s1, s2;
    s1.dt = s2.dt = dt;
    std::size_t line_no = 2;
    for (const auto& row : t.rows) {
        s1.dates.push_back(row[0]);
        s2.dates.push_back(row[0]);
        s1.values.push_back(detail::parse_double(row[1], line_no));
        s2.values.push_back(detail::parse_double(row[2], line_no));
        ++line_no;
    }
    detail::check_dates(s1.dates);
    s1.validate();
    s2.validate();
    return {s1, s2};
}

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("csv: cannot write '" + path + "'");
    for (std::size_t j = 0; j < header.size(); ++j)
        out << (j ? "," : "") << csv_quote(header[j]);
    out << "\r\n";
    for (const auto& row : rows) {
        for (std::size_t j = 0; j < row.size(); ++j)
            out << (j ? "," : "") << csv_quote(row[j]);
        out << "\r\n";
    }
    if (!out) throw input_error("csv: write failed for '" + path + "'");
}

// Shortest representation that round-trips a double.
inline std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace meanrev
