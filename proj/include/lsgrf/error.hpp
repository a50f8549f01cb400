#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace lsgrf {

// Argument outside the mathematical domain of an operation (e.g. a pole of D(x)).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Malformed FieldSpec / Pickands document. `path` is a JSON pointer to the
// offending element.
class SpecError : public std::runtime_error {
public:
    SpecError(std::string path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(std::move(path)) {}

    [[nodiscard]] const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class FactorizationError : public std::runtime_error {
public:
    FactorizationError(const std::string& what, double last_jitter, double min_eigenvalue)
        : std::runtime_error(what), last_jitter_(last_jitter), min_eigenvalue_(min_eigenvalue) {}

    [[nodiscard]] double last_jitter() const noexcept { return last_jitter_; }
    [[nodiscard]] double min_eigenvalue() const noexcept { return min_eigenvalue_; }

private:
    double last_jitter_;
    double min_eigenvalue_;
};

// Circulant embedding produced eigenvalues too negative to be round-off.
class EmbeddingError : public std::runtime_error {
public:
    EmbeddingError(const std::string& what, double min_eigenvalue)
        : std::runtime_error(what), min_eigenvalue_(min_eigenvalue) {}

    [[nodiscard]] double min_eigenvalue() const noexcept { return min_eigenvalue_; }

private:
    double min_eigenvalue_;
};

class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double estimate, double error_estimate)
        : std::runtime_error(what), estimate_(estimate), error_estimate_(error_estimate) {}

    [[nodiscard]] double estimate() const noexcept { return estimate_; }
    [[nodiscard]] double error_estimate() const noexcept { return error_estimate_; }

private:
    double estimate_;
    double error_estimate_;
};

}  // namespace lsgrf
