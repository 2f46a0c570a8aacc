#pragma once

#include <stdexcept>
#include <string>

namespace slicesim {

/// Base class for all library errors. CLI maps these to exit code 3,
/// except ConfigError/ParseError which map to exit code 2.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// simulation engine
class PastTimeError : public Error {
public:
    using Error::Error;
};

// physical model
class OutOfRangeError : public Error {
public:
    using Error::Error;
};
class ZeroAllocationError : public Error {
public:
    using Error::Error;
};

// environment
class NotResetError : public Error {
public:
    using Error::Error;
};
class DomainError : public Error {
public:
    using Error::Error;
};

// networks
class ShapeMismatchError : public Error {
public:
    using Error::Error;
};
class LayoutMismatchError : public Error {
public:
    using Error::Error;
};
class NonFiniteError : public Error {
public:
    using Error::Error;
};

// replay buffer
class DuplicateStepError : public Error {
public:
    using Error::Error;
};
class UnknownHandleError : public Error {
public:
    using Error::Error;
};
class AlreadyThawedError : public Error {
public:
    using Error::Error;
};
class InsufficientThawedError : public Error {
public:
    using Error::Error;
};
class FrozenInBatchError : public Error {
public:
    using Error::Error;
};

// population surgery
class WidthMismatchError : public Error {
public:
    using Error::Error;
};
class ShrinkNotSupportedError : public Error {
public:
    using Error::Error;
};
class EmptySurvivorSetError : public Error {
public:
    using Error::Error;
};
class ManifestMismatchError : public Error {
public:
    using Error::Error;
};

} // namespace slicesim
