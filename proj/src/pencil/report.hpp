#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pencil {

enum class Verdict { Pass, Fail, Inconclusive };

const char* verdict_name(Verdict v);

// Residual r passes when r <= pass*scale and fails when r >= fail*scale.
struct Thresholds {
  double pass = 1e-8;
  double fail = 1e-4;
};

Verdict classify(double value, double scale, const Thresholds& t);

struct Residual {
  std::string name;
  double value = 0.0;
  double scale = 1.0;
  Verdict verdict = Verdict::Pass;
  bool gating = true;
  std::string note;
};

// Named residual table. Names are unique; the overall verdict is the worst
// verdict among gating rows.
class ComplianceReport {
 public:
  void add(std::string name, double value, double scale, const Thresholds& t, bool gating = true,
           std::string note = {});
  // A row whose verdict is decided by the caller (bounds that must be
  // exceeded, counts, and similar).
  void add_decided(std::string name, double value, Verdict verdict, bool gating = true,
                   std::string note = {});
  void add_info(std::string name, double value, std::string note = {});
  void merge(const ComplianceReport& other, std::string_view prefix = {});

  bool has(std::string_view name) const;
  const Residual& at(std::string_view name) const;
  double value(std::string_view name) const { return at(name).value; }
  const std::vector<Residual>& rows() const { return rows_; }
  Verdict verdict() const;

  std::vector<double> lambdas;
  std::vector<double> skipped_lambdas;
  std::vector<std::string> notes;

 private:
  void push(Residual r);
  std::vector<Residual> rows_;
};

}  // namespace pencil
