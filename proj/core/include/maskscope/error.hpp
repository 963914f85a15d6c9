#pragma once

#include <stdexcept>
#include <string>

namespace maskscope {

// Base of every error the toolkit raises. The CLI maps the three families
// below onto exit codes 2 (config), 3 (data validation) and 4 (numeric).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace maskscope
