#pragma once

#include <stdexcept>
#include <string>

namespace courtsim {

/// Base class for all courtsim errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// domain / parsing
struct UnparseableDuration : Error { using Error::Error; };
struct UnparseableAmount : Error { using Error::Error; };
struct InvalidCase : Error { using Error::Error; };

// procedure engine
struct OutOfTurn : Error { using Error::Error; };
struct StageNotFinished : Error { using Error::Error; };
struct IllegalBacktrack : Error { using Error::Error; };

// agents / backends
struct BackendFailure : Error { using Error::Error; };
struct EmptyCompletion : Error { using Error::Error; };
struct VerdictParseFailure : Error {
    VerdictParseFailure(const std::string& msg, std::string doc)
        : Error(msg), document(std::move(doc)) {}
    std::string document;  // raw judgment document that failed to parse
};
struct ScriptMiss : Error { using Error::Error; };
struct RemoteExhausted : Error { using Error::Error; };
struct AuthMissing : Error { using Error::Error; };
struct CassetteMiss : Error { using Error::Error; };

// retrieval
struct ArticleNotFound : Error { using Error::Error; };
struct AmbiguousLawName : Error { using Error::Error; };
struct DuplicateArticle : Error { using Error::Error; };
struct MalformedRecord : Error { using Error::Error; };

// evaluation
struct ExtractionFailure : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct AllExcluded : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct MissingAnnotation : Error { using Error::Error; };
struct DegenerateMarginals : Error { using Error::Error; };
struct AlignmentError : Error { using Error::Error; };

// cli / io
struct ExtractionIncomplete : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace courtsim
