#pragma once

#include <stdexcept>
#include <string>

namespace tactix {

/// Malformed input document (JSON, CSV, wire frame).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Well-formed input that violates a domain invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precondition violated by a caller (out-of-bounds point, unknown id, ...).
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Wire-level violation: bad version, unknown message kind, seq regression.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class AnalysisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace tactix
