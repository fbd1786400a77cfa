#pragma once

#include <stdexcept>
#include <string>

namespace ctxrec {

// Base class for everything the toolkit can throw. The CLI maps these to
// exit codes: input problems -> 2, resource limits -> 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Fatal input problems: bad CSV header, unreadable file, malformed model file.
class ParseError : public Error {
public:
    using Error::Error;
};

// Invalid domain values: empty item id, reserved prefix, bad dimension name.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Unknown or duplicate context dimension.
class RegistryError : public Error {
public:
    using Error::Error;
};

// Virtual-item token cannot be formed (dimension name contains '=').
class EncodingError : public Error {
public:
    using Error::Error;
};

// Cosine over an empty occurrence set.
class UndefinedSimilarityError : public Error {
public:
    using Error::Error;
};

// choose_thresholds needs at least three distinct actual items.
class ThresholdError : public Error {
public:
    using Error::Error;
};

// Train/test split cannot be formed.
class SplitError : public Error {
public:
    using Error::Error;
};

// Evaluation ended with zero usable test cases.
class EvaluationError : public Error {
public:
    using Error::Error;
};

// Frequent-itemset cap (or similar guardrail) exceeded.
class ResourceLimitError : public Error {
public:
    using Error::Error;
};

}  // namespace ctxrec
