#pragma once

#include <stdexcept>
#include <string>

namespace aggnet {

// Base of every error the library throws.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class invalid_parameter : public error {
 public:
  using error::error;
};

class invalid_path : public error {
 public:
  using error::error;
};

class invalid_structure : public error {
 public:
  using error::error;
};

class invalid_input : public error {
 public:
  using error::error;
};

// Two transmissions of the same level share a node.
class schedule_conflict : public error {
 public:
  using error::error;
};

// The latency budget is below what the policy needs. min_delta is the
// smallest budget that would have been accepted.
class infeasible_budget : public error {
 public:
  infeasible_budget(const std::string& what, double min_delta)
      : error(what), min_delta_(min_delta) {}
  double min_delta() const noexcept { return min_delta_; }

 private:
  double min_delta_;
};

class io_error : public error {
 public:
  io_error(const std::string& what, std::string path)
      : error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace aggnet
