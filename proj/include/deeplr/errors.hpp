#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace deeplr {

// Every library failure derives from Error; kind() is the stable machine-readable tag
// the CLI puts in its error document.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& message) : Error("domain_error", message) {}
};

class DegenerateDataError : public Error {
public:
    explicit DegenerateDataError(const std::string& message)
        : Error("degenerate_data", message) {}
};

class DegenerateRequestError : public Error {
public:
    explicit DegenerateRequestError(const std::string& message)
        : Error("degenerate_request", message) {}
};

class NumericError : public Error {
public:
    NumericError(std::size_t layer, const std::string& message)
        : Error("numeric_error", message + " (layer " + std::to_string(layer) + ")"),
          layer_(layer) {}

    std::size_t layer() const noexcept { return layer_; }

private:
    std::size_t layer_;
};

class TrainingDivergedError : public Error {
public:
    TrainingDivergedError(std::size_t epoch, std::size_t batch, const std::string& message)
        : Error("training_diverged", message + " at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(batch)),
          epoch_(epoch), batch_(batch) {}

    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t batch() const noexcept { return batch_; }

private:
    std::size_t epoch_;
    std::size_t batch_;
};

class UnreachableDirectionError : public Error {
public:
    explicit UnreachableDirectionError(const std::string& message)
        : Error("unreachable_direction", message) {}
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& message) : Error("format_error", message) {}
};

}  // namespace deeplr
