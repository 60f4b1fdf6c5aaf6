#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace habilis {

// Machine-readable error codes shared across modules. These are the values
// that surface on CLI output and HTTP error bodies.
enum class Errc {
  kUnknownGeoEntity,
  kUnknownUser,
  kMalformedStore,
  kMalformedRequest,
  kNotMigrated,
  kCorruptJournal,
  kRejected,
  kUpstreamUnreachable,
  kIoError,
};

std::string_view to_string(Errc code);

struct Error {
  Errc code = Errc::kIoError;
  std::string message;
  // Set for journal corruption: byte position of the offending record.
  std::optional<std::uint64_t> byte_offset;
};

// Value-or-error carrier for operations that can fail without being
// exceptional. Decision-producing operations never use this: an
// authorization engine answers, it does not fail.
template <typename T>
class Result {
 public:
  Result(T value) : state_(std::move(value)) {}
  Result(Error error) : state_(std::move(error)) {}

  bool ok() const { return std::holds_alternative<T>(state_); }
  explicit operator bool() const { return ok(); }

  const T& value() const& { return std::get<T>(state_); }
  T& value() & { return std::get<T>(state_); }
  T&& value() && { return std::get<T>(std::move(state_)); }

  const Error& error() const { return std::get<Error>(state_); }

 private:
  std::variant<T, Error> state_;
};

}  // namespace habilis
