#include "thermoeq/records.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "thermoeq/errors.hpp"

namespace thermoeq {

const char* const kRecordsCsvHeader = "t,K,H,alpha,J,V,heat_rate,stat_residual";

void write_records_csv(const std::string& path, const std::vector<ObservableRecord>& records) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw IoError("cannot open " + path + " for writing");
    std::fprintf(f, "%s\n", kRecordsCsvHeader);
    for (const auto& r : records)
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                     r.t, r.kinetic, r.total_energy, r.alpha, r.current, r.potential,
                     r.heat_rate, r.stationarity);
    if (std::fclose(f) != 0) throw IoError("write failure on " + path);
}

std::vector<ObservableRecord> read_records_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file", 1);
    if (line == std::string(kRecordsCsvHeader) + "\r") line.pop_back();
    if (line != kRecordsCsvHeader)
        throw ParseError(path + ": unexpected header \"" + line + "\"", 1);
    std::vector<ObservableRecord> out;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        double v[8];
        char comma;
        for (int k = 0; k < 8; ++k) {
            if (!(ss >> v[k]))
                throw ParseError(path + ": bad number in column " + std::to_string(k + 1), line_no);
            if (k < 7 && !(ss >> comma && comma == ','))
                throw ParseError(path + ": expected ',' after column " + std::to_string(k + 1), line_no);
        }
        out.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]});
    }
    return out;
}

} // namespace thermoeq
