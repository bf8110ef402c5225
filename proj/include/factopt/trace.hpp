#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include "factopt/optim.hpp"

namespace factopt {

// CSV trace, one row per slot per traced step. Numbers are written in the
// shortest form that round-trips a 64-bit float, so identical runs produce
// byte-identical files.
//
// Columns: t,loss,slot,rms_u,rms_x,alpha,clipped,diverged
class TraceWriter {
 public:
  explicit TraceWriter(const std::string& path);

  void record(std::int64_t t, double loss, const std::string& slot,
              const StepDiagnostics& d, bool diverged);

  static std::string format_double(double v);
  static const char* header();

 private:
  std::ofstream out_;
};

}  // namespace factopt
