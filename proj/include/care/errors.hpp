#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "care/strategy.hpp"

namespace care {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::string cause)
      : Error("line " + std::to_string(line) + ": " + cause),
        line_(line),
        cause_(std::move(cause)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& cause() const noexcept { return cause_; }

 private:
  std::size_t line_;
  std::string cause_;
};

class ModelNotTrained : public Error {
 public:
  ModelNotTrained() : Error("model not trained") {}
};

class InsufficientData : public Error {
 public:
  explicit InsufficientData(Strategy s)
      : Error("insufficient training data for strategy " +
              std::string(to_string(s))),
        strategy_(s) {}
  Strategy strategy() const noexcept { return strategy_; }

 private:
  Strategy strategy_;
};

class EmptyTestSet : public Error {
 public:
  explicit EmptyTestSet(Strategy s)
      : Error("no test instances for strategy " + std::string(to_string(s))),
        strategy_(s) {}
  Strategy strategy() const noexcept { return strategy_; }

 private:
  Strategy strategy_;
};

class EmptyCorpus : public Error {
 public:
  EmptyCorpus() : Error("corpus has no labeled counselor utterances") {}
};

class LexiconMissing : public Error {
 public:
  using Error::Error;
};

class EmptySent : public Error {
 public:
  EmptySent() : Error("sent message is empty") {}
};

class EmptySample : public Error {
 public:
  EmptySample() : Error("sample is empty") {}
};

}  // namespace care
