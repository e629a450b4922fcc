#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "adaptrial/trial.hpp"

namespace adaptrial::service {

enum class Status { Enrolling, AwaitingOutcome, StoppedDecisive, BudgetExhausted };

std::string_view to_string(Status s);

/// Carries the HTTP status the API layer should answer with.
class ServiceError : public std::runtime_error {
public:
    ServiceError(int http_status, std::string code, const std::string& message,
                 std::optional<std::string> field = std::nullopt, nlohmann::json details = nullptr);
    int http_status() const { return http_status_; }
    const std::string& code() const { return code_; }
    const std::optional<std::string>& field() const { return field_; }
    nlohmann::json to_json() const;

private:
    int http_status_;
    std::string code_;
    std::optional<std::string> field_;
    nlohmann::json details_;
};

/// Uniform draw used for patient t of a live trial. Depends only on (seed, t),
/// so a restarted service continues the exact same randomization sequence.
double live_uniform(std::uint64_t seed, int t);

/// Live trials backed by one append-only JSONL event log per trial in state_dir.
/// Every mutation is appended and fsynced before the in-memory state changes.
class TrialService {
public:
    explicit TrialService(std::filesystem::path state_dir);
    ~TrialService();
    TrialService(const TrialService&) = delete;
    TrialService& operator=(const TrialService&) = delete;

    /// Returns {trial_id, status, config}. Missing seed gets a random one.
    nlohmann::json create_trial(const nlohmann::json& config);
    /// Returns {t, wA, wB, arm, rule, forecast_A, forecast_B}; the uniform draw stays in the log.
    nlohmann::json enroll(const std::string& id, double x);
    /// Returns {t, bf, decisive, status, posterior_summary}.
    nlohmann::json record_outcome(const std::string& id, int t, double y);
    nlohmann::json get_trial(const std::string& id) const;

    std::vector<std::string> trial_ids() const;
    /// Problems met while replaying logs at startup (one line per skipped trial or torn tail).
    const std::vector<std::string>& recovery_notes() const { return recovery_notes_; }
    const std::filesystem::path& state_dir() const { return dir_; }
    std::filesystem::path log_path(const std::string& id) const;

    /// Read-only session snapshot (copy) for parity checks.
    TrialSession session_snapshot(const std::string& id) const;

private:
    struct Live;

    Live& find(const std::string& id) const;
    void load_all();

    std::filesystem::path dir_;
    mutable std::shared_mutex registry_mutex_;
    std::map<std::string, std::unique_ptr<Live>> trials_;
    std::vector<std::string> recovery_notes_;
};

}  // namespace adaptrial::service
