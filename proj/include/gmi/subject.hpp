#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gmi {

// Problems in user-supplied or resampled data (bad CSV rows, degenerate
// inputs, bootstrap collapse). Distinct from std::invalid_argument, which is
// reserved for caller bugs.
struct data_error : std::runtime_error {
  explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// One patient: prior-line event time t0 (always observed), follow-up time
// y1 = min(t1, c1) with event flag delta1, plus optional covariates.
// The ratio y1/t0 is the censored observation of the time ratio t1/t0.
struct SubjectRecord {
  double t0 = 0.0;
  double y1 = 0.0;
  int delta1 = 1;          // 1 = event observed, 0 = censored
  std::vector<double> z;   // continuous covariates (may be empty)
  std::vector<int> v;      // categorical covariate codes (may be empty)

  double ratio() const { return y1 / t0; }
};

enum class Method : int { proposed = 0, km = 1, lognormal = 2, loglogistic = 3 };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::proposed:    return "proposed";
    case Method::km:          return "km";
    case Method::lognormal:   return "lognormal";
    case Method::loglogistic: return "loglogistic";
  }
  return "?";
}

constexpr int kMethodCount = 4;

inline void validate_dataset(const std::vector<SubjectRecord>& data) {
  if (data.empty()) throw data_error("dataset is empty");
  const std::size_t q = data.front().z.size();
  const std::size_t vq = data.front().v.size();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const SubjectRecord& s = data[i];
    const std::string where = "record " + std::to_string(i + 1) + ": ";
    if (!(s.t0 > 0.0)) throw data_error(where + "t0 must be positive");
    if (!(s.y1 > 0.0)) throw data_error(where + "follow-up time must be positive");
    if (s.delta1 != 0 && s.delta1 != 1) throw data_error(where + "status must be 0 or 1");
    if (s.z.size() != q || s.v.size() != vq)
      throw data_error(where + "covariate arity differs from the first record");
  }
}

}  // namespace gmi
