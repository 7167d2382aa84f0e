#pragma once

#include <string>
#include <vector>

namespace thermoeq {

/// One sampled row of a run. `current` is the per-particle mean velocity along
/// the driving field direction, zero when the field vanishes; `heat_rate` is
/// (p/m).(xi - alpha p); `stationarity` is grad V . p / m, the time derivative
/// of the potential along the trajectory.
struct ObservableRecord {
    double t = 0.0;
    double kinetic = 0.0;
    double total_energy = 0.0;
    double alpha = 0.0;
    double current = 0.0;
    double potential = 0.0;
    double heat_rate = 0.0;
    double stationarity = 0.0;
};

/// Column header of the records CSV; fixed, order is part of the file format.
extern const char* const kRecordsCsvHeader;  // "t,K,H,alpha,J,V,heat_rate,stat_residual"

/// Write records with 17 significant digits (doubles round-trip exactly).
void write_records_csv(const std::string& path, const std::vector<ObservableRecord>& records);

/// Read a records CSV written by write_records_csv; throws IoError / ParseError.
std::vector<ObservableRecord> read_records_csv(const std::string& path);

} // namespace thermoeq
