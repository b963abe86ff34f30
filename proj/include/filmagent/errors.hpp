#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace filmagent {

/// Base class for all errors raised by this library. `kind()` returns a
/// stable machine-readable name so callers can branch without RTTI.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define FILMAGENT_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                        \
    public:                                                            \
        explicit Name(const std::string& message)                      \
            : Error(#Name, message) {}                                 \
    }

// environment
FILMAGENT_DEFINE_ERROR(ParseError);
FILMAGENT_DEFINE_ERROR(IntegrityError);
FILMAGENT_DEFINE_ERROR(UnknownActionError);
FILMAGENT_DEFINE_ERROR(UnknownShotError);
FILMAGENT_DEFINE_ERROR(UnknownPositionError);

// script model
FILMAGENT_DEFINE_ERROR(SchemaError);

// provider
FILMAGENT_DEFINE_ERROR(TransportError);
FILMAGENT_DEFINE_ERROR(AuthError);
FILMAGENT_DEFINE_ERROR(ProviderError);
FILMAGENT_DEFINE_ERROR(NoJsonFound);
FILMAGENT_DEFINE_ERROR(ReplayExhausted);

// collaboration / crew
FILMAGENT_DEFINE_ERROR(AgentError);
FILMAGENT_DEFINE_ERROR(MissingVariable);
FILMAGENT_DEFINE_ERROR(UnknownTemplate);

// validator
FILMAGENT_DEFINE_ERROR(ConflictingSuggestions);

// workflow
FILMAGENT_DEFINE_ERROR(ConstraintViolation);
FILMAGENT_DEFINE_ERROR(InsertionOutOfRange);
FILMAGENT_DEFINE_ERROR(MergeArityMismatch);
FILMAGENT_DEFINE_ERROR(ValidationGateFailed);

#undef FILMAGENT_DEFINE_ERROR

/// Carries the last raw model output so callers can log what failed.
class SchemaRetriesExhausted : public Error {
public:
    SchemaRetriesExhausted(const std::string& message, std::string last_raw)
        : Error("SchemaRetriesExhausted", message), last_raw_(std::move(last_raw)) {}

    const std::string& last_raw() const noexcept { return last_raw_; }

private:
    std::string last_raw_;
};

} // namespace filmagent
