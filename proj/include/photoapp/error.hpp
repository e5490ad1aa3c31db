// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace photoapp {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Malformed file contents (bad header, bad field).
class FormatError : public Error
{
public:
    using Error::Error;
};

/// Input ended before the declared amount of data was read.
class TruncationError : public Error
{
public:
    using Error::Error;
};

/// Well-formed input that uses a feature we do not implement.
class UnsupportedError : public Error
{
public:
    using Error::Error;
};

class ParameterError : public Error
{
public:
    using Error::Error;
};

/// Shapes or dimensions that do not agree.
class StructuralError : public Error
{
public:
    using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error
{
public:
    using Error::Error;
};

/// A component lacks a required capability (e.g. a generator without an encoder).
class CapabilityError : public Error
{
public:
    using Error::Error;
};

class ConfigurationError : public Error
{
public:
    using Error::Error;
};

class CorruptionError : public Error
{
public:
    using Error::Error;
};

class VersionError : public Error
{
public:
    using Error::Error;
};

class IoError : public Error
{
public:
    using Error::Error;
};

} // namespace photoapp
