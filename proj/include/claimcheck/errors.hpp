#pragma once

#include <stdexcept>
#include <string>

namespace claimcheck {

/// Base for every error raised by the pipeline. Each stage throws its own
/// subclass so callers can decide between skipping, falling back and aborting.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CLAIMCHECK_DEFINE_ERROR(Name)        \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  }

// Configuration and input validation.
CLAIMCHECK_DEFINE_ERROR(ConfigError);
CLAIMCHECK_DEFINE_ERROR(InvalidClaim);
CLAIMCHECK_DEFINE_ERROR(InvalidScheme);
CLAIMCHECK_DEFINE_ERROR(UsageError);

// Providers (negation, embedding, verdict, web search).
CLAIMCHECK_DEFINE_ERROR(ProviderUnavailable);
CLAIMCHECK_DEFINE_ERROR(DegenerateNegation);
CLAIMCHECK_DEFINE_ERROR(NoValidOption);

// Retrieval and indexing.
CLAIMCHECK_DEFINE_ERROR(SourceUnavailable);
CLAIMCHECK_DEFINE_ERROR(EmptyCorpus);
CLAIMCHECK_DEFINE_ERROR(IndexFormatError);

// Selection and ranking.
CLAIMCHECK_DEFINE_ERROR(ZeroVector);
CLAIMCHECK_DEFINE_ERROR(SelectionFailed);
CLAIMCHECK_DEFINE_ERROR(RankingFailed);

// Prompting.
CLAIMCHECK_DEFINE_ERROR(TemplateMissingPlaceholder);

// Analysis.
CLAIMCHECK_DEFINE_ERROR(WrongArity);
CLAIMCHECK_DEFINE_ERROR(TooFewSamples);
CLAIMCHECK_DEFINE_ERROR(DegenerateSamples);
CLAIMCHECK_DEFINE_ERROR(UnknownGoldLabel);

// Datasets.
CLAIMCHECK_DEFINE_ERROR(FileMissing);
CLAIMCHECK_DEFINE_ERROR(EmptyDataset);

#undef CLAIMCHECK_DEFINE_ERROR

}  // namespace claimcheck
