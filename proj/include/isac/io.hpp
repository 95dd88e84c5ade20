#ifndef ISAC_IO_HPP
#define ISAC_IO_HPP

#include <string>
#include <vector>

#include "isac/eval.hpp"
#include "isac/signal_model.hpp"

namespace isac {

/// Shortest exactly-round-tripping decimal form of a double.
std::string format_double(double v);

/// Reference waveform CSV: header `x0_real`, one real dimension per row.
void save_waveform_csv(const std::string& path, const Vec& x0);
Vec load_waveform_csv(const std::string& path);

/// Channel CSV: header `row,col,re,im`, one complex entry per row.
void save_channel_csv(const std::string& path, const ChannelMatrix& H);
ChannelMatrix load_channel_csv(const std::string& path);

/// Signal set CSV: M rows of N real columns, header x_0..x_{N-1}.
void save_signals_csv(const std::string& path, const std::vector<Vec>& signals);
std::vector<Vec> load_signals_csv(const std::string& path);

/// Generic curve CSV: one header row, one row per grid point.
void save_curve_csv(const std::string& path, const std::vector<std::string>& columns,
                    const std::vector<std::vector<double>>& rows);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

/// Hex SHA-256 of a byte string (content hash for manifests).
std::string sha256_hex(const std::string& bytes);

}  // namespace isac

#endif
