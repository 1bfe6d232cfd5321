#pragma once

#include <stdexcept>
#include <string>

namespace bovi {

/// Base class for all domain errors raised by the pipeline.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define BOVI_DEFINE_ERROR(Name)                                                \
    struct Name : Error {                                                      \
        using Error::Error;                                                    \
    }

// ingest
BOVI_DEFINE_ERROR(DimensionMismatch);
BOVI_DEFINE_ERROR(MalformedCsv);
BOVI_DEFINE_ERROR(NegativeDepth);
BOVI_DEFINE_ERROR(OutOfBounds);
BOVI_DEFINE_ERROR(DuplicateSession);
BOVI_DEFINE_ERROR(UnknownVideoReference);
BOVI_DEFINE_ERROR(MalformedManifest);

// segment
BOVI_DEFINE_ERROR(EmptyInput);
BOVI_DEFINE_ERROR(NoForeground);
BOVI_DEFINE_ERROR(NoValidThreshold);

// geometry
BOVI_DEFINE_ERROR(DegenerateInput);

// biometrics
BOVI_DEFINE_ERROR(AllDepthMissing);

// regression
BOVI_DEFINE_ERROR(RankDeficient);
BOVI_DEFINE_ERROR(ZeroVarianceColumn);
BOVI_DEFINE_ERROR(NonConvergence);
BOVI_DEFINE_ERROR(TooFewGroups);
BOVI_DEFINE_ERROR(UnknownCow);

// evaluation
BOVI_DEFINE_ERROR(ZeroVariance);
BOVI_DEFINE_ERROR(ZeroTruth);
BOVI_DEFINE_ERROR(DegenerateSplit);
BOVI_DEFINE_ERROR(InvalidK);
BOVI_DEFINE_ERROR(IncompatibleDesign);

// synth / cli
BOVI_DEFINE_ERROR(SpecOutOfFrame);
BOVI_DEFINE_ERROR(ConfigError);
BOVI_DEFINE_ERROR(IoError);

#undef BOVI_DEFINE_ERROR

} // namespace bovi
