#pragma once

#include <vector>

#include "adr/sampler.hpp"

namespace adr::test {

struct FewShotRow {
  const char* label;
  FewShotMode mode;
  std::size_t shots, n_neg, n_source;
  std::size_t train_pos, train_neg, train_source;
};

// Every few-shot row of the published results table, with its closed-form
// train-set composition (the dev set has the same composition).
inline const std::vector<FewShotRow>& published_fewshot_rows() {
  static const std::vector<FewShotRow> rows = {
      {"SVM per_class 10", FewShotMode::per_class, 10, 0, 0, 5, 5, 0},
      {"SVM per_class 40", FewShotMode::per_class, 40, 0, 0, 20, 20, 0},
      {"SVM add_neg 10 + 200 neg", FewShotMode::add_neg, 10, 200, 0, 10, 200, 0},
      {"SVM add_neg 40 + 400 neg", FewShotMode::add_neg, 40, 400, 0, 40, 400, 0},
      {"XLM-R per_class 10", FewShotMode::per_class, 10, 0, 0, 5, 5, 0},
      {"XLM-R per_class 40", FewShotMode::per_class, 40, 0, 0, 20, 20, 0},
      {"XLM-R add_neg 40 + 100 neg", FewShotMode::add_neg, 40, 100, 0, 40, 100, 0},
      {"XLM-R add_source 10 + 100 neg + 200 source", FewShotMode::add_source, 10, 100, 200, 10, 100, 200},
      {"XLM-R add_source 40 + 300 neg + 300 source", FewShotMode::add_source, 40, 300, 300, 40, 300, 300},
      {"BRB per_class 10", FewShotMode::per_class, 10, 0, 0, 5, 5, 0},
      {"BRB per_class 40", FewShotMode::per_class, 40, 0, 0, 20, 20, 0},
      {"BRB add_neg 40 + 100 neg", FewShotMode::add_neg, 40, 100, 0, 40, 100, 0},
      {"BRB add_source 40 + 100 neg + 200 source", FewShotMode::add_source, 40, 100, 200, 40, 100, 200},
  };
  return rows;
}

}  // namespace adr::test
