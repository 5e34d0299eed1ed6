#ifndef SAS_ERRORS_HPP
#define SAS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sas {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// grid / topology
struct CooldownViolation : Error { using Error::Error; };
struct UnknownElement : Error { using Error::Error; };

// power flow
struct SingularSystem : Error { using Error::Error; };
struct NotConverged : Error { using Error::Error; };

// environment
struct InfeasibleDispatch : Error { using Error::Error; };
struct EpisodeFinished : Error { using Error::Error; };
struct SimulationBudgetExhausted : Error { using Error::Error; };

// catalogue
struct OutOfRange : Error { using Error::Error; };
struct NotInCatalogue : Error { using Error::Error; };

// policy
struct DimensionMismatch : Error { using Error::Error; };
struct CorruptCheckpoint : Error { using Error::Error; };
struct VersionMismatch : Error { using Error::Error; };

// workers / trainer
struct PartialBroadcast : Error { using Error::Error; };
struct WorkerPoolFailure : Error { using Error::Error; };

// io
struct IoError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };

}  // namespace sas

#endif
