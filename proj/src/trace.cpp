#include "factopt/trace.hpp"

#include <charconv>
#include <stdexcept>

namespace factopt {

TraceWriter::TraceWriter(const std::string& path)
    : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw std::runtime_error("cannot open trace file '" + path + "'");
  out_ << header() << "\n";
}

const char* TraceWriter::header() {
  return "t,loss,slot,rms_u,rms_x,alpha,clipped,diverged";
}

std::string TraceWriter::format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

void TraceWriter::record(std::int64_t t, double loss, const std::string& slot,
                         const StepDiagnostics& d, bool diverged) {
  out_ << t << ',' << format_double(loss) << ',' << slot << ','
       << format_double(d.rms_u) << ',' << format_double(d.rms_x) << ','
       << format_double(d.alpha) << ',' << (d.clipped ? 1 : 0) << ','
       << (diverged ? 1 : 0) << "\n";
  if (!out_) throw std::runtime_error("trace write failed");
}

}  // namespace factopt
