#pragma once

#include <stdexcept>
#include <string>

namespace adr {

// Base class for every error raised by the toolkit. The category decides the
// CLI exit code (see cli.hpp).
class Error : public std::runtime_error {
 public:
  enum class Category { config, data, job, internal };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

#define ADR_DEFINE_ERROR(Name, Cat)                                  \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& what) : Error(Category::Cat, what) {} \
  };

ADR_DEFINE_ERROR(SchemaError, data)
ADR_DEFINE_ERROR(ValueError, data)
ADR_DEFINE_ERROR(UniquenessError, data)
ADR_DEFINE_ERROR(StratificationError, data)
ADR_DEFINE_ERROR(CapacityError, data)
ADR_DEFINE_ERROR(AlignmentError, data)
ADR_DEFINE_ERROR(UndefinedMetricError, data)
ADR_DEFINE_ERROR(LoadError, data)
ADR_DEFINE_ERROR(ArgumentError, data)
ADR_DEFINE_ERROR(ConfigError, config)
ADR_DEFINE_ERROR(TrainingDivergenceError, job)
ADR_DEFINE_ERROR(JobFailure, job)
ADR_DEFINE_ERROR(InvariantError, internal)

#undef ADR_DEFINE_ERROR

}  // namespace adr
