#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "mupre/harness.hpp"

namespace mupre {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string records_to_csv(const std::vector<MetricRecord>& records) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const MetricRecord& r : records) {
    out += r.run_id + ',' + std::to_string(r.width) + ',' + std::to_string(r.depth) + ',' + std::to_string(r.step) +
           ',' + format_number(r.eta_base) + ',' + format_number(r.loss) + ',' + r.layer + ',' +
           format_number(r.delta_h_rms) + ',' + format_number(r.srank) + ',' + format_number(r.spec_norm) + '\n';
  }
  return out;
}

std::vector<MetricRecord> collect_records(const std::vector<RunResult>& runs) {
  std::vector<MetricRecord> out;
  for (const RunResult& r : runs) out.insert(out.end(), r.records.begin(), r.records.end());
  return out;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open '" + tmp + "' for writing");
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    f.flush();
    if (!f) throw Error("write to '" + tmp + "' failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error("cannot rename '" + tmp + "' to '" + path + "'");
  }
}

}  // namespace mupre
