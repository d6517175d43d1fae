#pragma once

#include <stdexcept>
#include <string>

namespace bbmlab {

// Base of every error the library raises deliberately. Precondition
// violations on plain arguments use std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyPopulationError : public Error {
 public:
  EmptyPopulationError() : Error("empty population: operation needs at least one particle") {}
};

class GenealogyUnavailableError : public Error {
 public:
  GenealogyUnavailableError()
      : Error("genealogy not recorded: rerun with record_genealogy enabled") {}
};

class InstabilityError : public Error {
 public:
  using Error::Error;
};

class NoCrossingError : public Error {
 public:
  using Error::Error;
};

class NoAcceptanceError : public Error {
 public:
  NoAcceptanceError(const std::string& what, double estimated_acceptance)
      : Error(what), estimated_acceptance_(estimated_acceptance) {}
  double estimated_acceptance() const { return estimated_acceptance_; }

 private:
  double estimated_acceptance_;
};

}  // namespace bbmlab
