#include "isac/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "isac/errors.hpp"

namespace isac {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw InvalidInput("format_double: conversion failed");
    return std::string(buf, ptr);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot open for writing: " + path);
    out << text;
    if (!out) throw InvalidInput("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::vector<std::string> split_line(const std::string& line, char sep = ',') {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            parts.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    parts.push_back(cur);
    return parts;
}

double parse_double(const std::string& s, const std::string& path) {
    double v = 0.0;
    const auto* begin = s.data();
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end)
        throw InvalidInput("bad numeric field '" + s + "' in " + path);
    return v;
}

long parse_long(const std::string& s, const std::string& path) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw InvalidInput("bad integer field '" + s + "' in " + path);
    return v;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

}  // namespace

void save_waveform_csv(const std::string& path, const Vec& x0) {
    std::string out = "x0_real\n";
    for (Eigen::Index i = 0; i < x0.size(); ++i) out += format_double(x0(i)) + "\n";
    write_text_file(path, out);
}

Vec load_waveform_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty() || lines[0] != "x0_real")
        throw InvalidInput("waveform CSV must start with header 'x0_real': " + path);
    Vec x(static_cast<Eigen::Index>(lines.size() - 1));
    for (std::size_t i = 1; i < lines.size(); ++i)
        x(static_cast<Eigen::Index>(i - 1)) = parse_double(lines[i], path);
    return x;
}

void save_channel_csv(const std::string& path, const ChannelMatrix& H) {
    std::string out = "row,col,re,im\n";
    for (Eigen::Index i = 0; i < H.rows(); ++i)
        for (Eigen::Index j = 0; j < H.cols(); ++j)
            out += std::to_string(i) + "," + std::to_string(j) + "," +
                   format_double(H(i, j).real()) + "," + format_double(H(i, j).imag()) + "\n";
    write_text_file(path, out);
}

ChannelMatrix load_channel_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty() || lines[0] != "row,col,re,im")
        throw InvalidInput("channel CSV must start with header 'row,col,re,im': " + path);
    long max_r = -1, max_c = -1;
    struct Entry {
        long r, c;
        double re, im;
    };
    std::vector<Entry> entries;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split_line(lines[i]);
        if (f.size() != 4) throw InvalidInput("channel CSV row needs 4 fields: " + path);
        Entry e{parse_long(f[0], path), parse_long(f[1], path), parse_double(f[2], path),
                parse_double(f[3], path)};
        if (e.r < 0 || e.c < 0) throw InvalidInput("channel CSV has negative index: " + path);
        max_r = std::max(max_r, e.r);
        max_c = std::max(max_c, e.c);
        entries.push_back(e);
    }
    if (entries.empty()) throw InvalidInput("channel CSV has no entries: " + path);
    ChannelMatrix H = ChannelMatrix::Zero(max_r + 1, max_c + 1);
    for (const auto& e : entries) H(e.r, e.c) = std::complex<double>(e.re, e.im);
    return H;
}

void save_signals_csv(const std::string& path, const std::vector<Vec>& signals) {
    if (signals.empty()) throw InvalidInput("save_signals_csv: empty set");
    const Eigen::Index N = signals[0].size();
    std::string out;
    for (Eigen::Index j = 0; j < N; ++j) out += (j ? ",x_" : "x_") + std::to_string(j);
    out += "\n";
    for (const Vec& s : signals) {
        if (s.size() != N) throw InvalidInput("save_signals_csv: ragged rows");
        for (Eigen::Index j = 0; j < N; ++j) out += (j ? "," : "") + format_double(s(j));
        out += "\n";
    }
    write_text_file(path, out);
}

std::vector<Vec> load_signals_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.size() < 2) throw InvalidInput("signals CSV needs a header and rows: " + path);
    const std::size_t N = split_line(lines[0]).size();
    std::vector<Vec> signals;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split_line(lines[i]);
        if (f.size() != N) throw InvalidInput("signals CSV has ragged rows: " + path);
        Vec s(static_cast<Eigen::Index>(N));
        for (std::size_t j = 0; j < N; ++j)
            s(static_cast<Eigen::Index>(j)) = parse_double(f[j], path);
        signals.push_back(std::move(s));
    }
    return signals;
}

void save_curve_csv(const std::string& path, const std::vector<std::string>& columns,
                    const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (std::size_t j = 0; j < columns.size(); ++j) out += (j ? "," : "") + columns[j];
    out += "\n";
    for (const auto& row : rows) {
        if (row.size() != columns.size()) throw InvalidInput("save_curve_csv: ragged rows");
        for (std::size_t j = 0; j < row.size(); ++j)
            out += (j ? "," : "") + format_double(row[j]);
        out += "\n";
    }
    write_text_file(path, out);
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr))
        throw InvalidInput("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

}  // namespace isac
