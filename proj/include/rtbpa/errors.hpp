// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace rtbpa {

// Base of every library error; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GrazingIncidence : public Error {
public:
    using Error::Error;
};

class NonPlanarReflector : public Error {
public:
    using Error::Error;
};

class CrossPolarized : public Error {
public:
    using Error::Error;
};

class Singular : public Error {
public:
    using Error::Error;
};

class EmptyInput : public Error {
public:
    using Error::Error;
};

class EmptyImage : public Error {
public:
    using Error::Error;
};

class UnresolvedLobe : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

class UnknownReference : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Schema or syntax problem in an input document. `field` is a dotted JSON
// path ("scene.facets[1].normal"), `line` is 1-based or 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string &message, std::string field, int line = 0)
        : Error(message), field_(std::move(field)), line_(line)
    {
    }

    const std::string &field() const noexcept { return field_; }
    int line() const noexcept { return line_; }

private:
    std::string field_;
    int line_;
};

} // namespace rtbpa
