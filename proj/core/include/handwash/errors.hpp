#pragma once

#include <stdexcept>
#include <string>

namespace handwash {

// Base for everything this library throws on purpose. The CLI maps any
// Error to exit code 2 (user/config problem) and anything else to 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Dataset splitting preconditions (e.g. a class with fewer than 2 samples).
class SplitError : public Error {
public:
    using Error::Error;
};

class PreprocessError : public Error {
public:
    using Error::Error;
};

// Manifest file problems. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg, long line = -1)
        : Error(line >= 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

class DecodeError : public Error {
public:
    using Error::Error;
};

class EmptyClipError : public Error {
public:
    using Error::Error;
};

class CorpusLayoutError : public Error {
public:
    using Error::Error;
};

class WeightsUnavailableError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class TrainDataError : public Error {
public:
    using Error::Error;
};

// Non-finite loss during training. Carries the 1-based epoch number.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& msg, int epoch)
        : Error(msg + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
    int epoch() const { return epoch_; }

private:
    int epoch_;
};

class EvalError : public Error {
public:
    using Error::Error;
};

// Frame index outside a clip. Carries the offending index.
class RangeError : public Error {
public:
    RangeError(const std::string& msg, long index)
        : Error(msg + ": " + std::to_string(index)), index_(index) {}
    long index() const { return index_; }

private:
    long index_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace handwash
