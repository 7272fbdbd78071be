#pragma once

#include <stdexcept>
#include <string>

namespace phasedyn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

/// Malformed input file (not valid JSON, wrong value types, missing keys).
class ParseError : public Error {
public:
	using Error::Error;
};

/// Well-formed input that violates a model invariant.
class ValidationError : public Error {
public:
	using Error::Error;
};

/// A bus, switch, fault or machine id that does not exist.
class UnknownReference : public Error {
public:
	using Error::Error;
};

/// Two-sample phasor recovery requested at a pair of instants where
/// sin(w_s (t2 - t1)) vanishes.
class SingularSampling : public Error {
public:
	using Error::Error;
};

class NonConvergence : public Error {
public:
	using Error::Error;
};

/// An island flagged energized has no voltage-fixing bus.
class UnsourcedIsland : public Error {
public:
	using Error::Error;
};

/// Branch impedance matrix or network Jacobian cannot be factorized.
class SingularNetwork : public Error {
public:
	using Error::Error;
};

class IntegrationFailure : public Error {
public:
	using Error::Error;
};

/// Requested generator dispatch cannot be met by the initial power flow
/// or the machine internal EMF.
class InfeasibleDispatch : public Error {
public:
	using Error::Error;
};

} // namespace phasedyn
