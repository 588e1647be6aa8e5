#pragma once

#include <stdexcept>
#include <string>

namespace nvi {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A parameter is outside its documented range (target_fs <= 0, band edge
// above Nyquist, ...).
class ParamError : public Error {
public:
    explicit ParamError(const std::string& msg) : Error(msg) {}
};

// Input data is malformed or insufficient (non-finite sample, too few
// intervals, single-class labels, unreadable CSV row, ...).
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// A value is outside the mathematical domain of an operation
// (SpO2 above 100 %, negative perfusion index, score outside [0,100]).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

// Tensor/batch shape mismatch; message carries expected vs actual.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

} // namespace nvi
