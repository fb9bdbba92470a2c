#pragma once

#include <stdexcept>
#include <string>

namespace riskpipe {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Domain type invariant violated (bad label string, invalid probability
// vector, empty post text, ...).
struct DomainError : Error {
    using Error::Error;
};

// prompt-engine: malformed template (placeholder missing/duplicated, no
// exemplars, inconsistent compiled answers, bad section layout).
struct TemplateError : Error {
    using Error::Error;
};

// llm-gateway
struct TransportError : Error {
    using Error::Error;
};
struct ProtocolError : Error {
    using Error::Error;
};
// Raised when a completion ran out of its token budget (finish_reason =
// "length"), or by truncate_middle when the budget cannot hold head + tail.
// For the gateway case the truncated text is preserved in partial_text.
struct BudgetError : Error {
    explicit BudgetError(const std::string& what, std::string partial = {})
        : Error(what), partial_text(std::move(partial)) {}
    std::string partial_text;
};

// annotator
struct ParseError : Error {
    using Error::Error;
};
struct PreconditionError : Error {
    using Error::Error;
};
struct AnnotationError : Error {
    using Error::Error;
};

// consensus
struct DuplicateAnnotationError : Error {
    using Error::Error;
};
struct OverlapError : Error {
    using Error::Error;
};
struct MissingPostError : Error {
    using Error::Error;
};

// datasplit
struct FormatError : Error {
    using Error::Error;
};
struct DuplicateIdError : Error {
    using Error::Error;
};
struct InsufficientClassError : Error {
    using Error::Error;
};

// ensemble
struct EmptyInputError : Error {
    using Error::Error;
};
struct MissingMemberError : Error {
    using Error::Error;
};

// metrics
struct LengthMismatchError : Error {
    using Error::Error;
};
struct EmptyError : Error {
    using Error::Error;
};

// softf1 lab
struct ShapeError : Error {
    using Error::Error;
};
struct DegenerateDataError : Error {
    using Error::Error;
};

// config / CLI
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace riskpipe
