#pragma once

#include <stdexcept>
#include <string>

namespace turbulux {

/// Base for every error the library raises. `module()` names the component
/// that detected the failure so tools can report it.
class Error : public std::runtime_error {
public:
    Error(std::string module, const std::string& message);

    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

/// Rejected inputs: non-physical channel parameters, bad grids, bad counts.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Moment sets that no distribution can produce (e.g. <S^2> < <S>^2).
class InvalidMoments : public Error {
public:
    using Error::Error;
};

/// Formula or algorithm used outside its regime of validity.
class ModelBreakdown : public Error {
public:
    using Error::Error;
};

}  // namespace turbulux
