#include "adaptrial/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include "adaptrial/config.hpp"
#include "adaptrial/error.hpp"
#include "adaptrial/rng.hpp"

namespace adaptrial::service {

using nlohmann::json;

std::string_view to_string(Status s)
{
    switch (s) {
    case Status::Enrolling: return "ENROLLING";
    case Status::AwaitingOutcome: return "AWAITING_OUTCOME";
    case Status::StoppedDecisive: return "STOPPED_DECISIVE";
    case Status::BudgetExhausted: return "BUDGET_EXHAUSTED";
    }
    return "UNKNOWN";
}

ServiceError::ServiceError(int http_status, std::string code, const std::string& message,
                           std::optional<std::string> field, json details)
    : std::runtime_error(message),
      http_status_(http_status),
      code_(std::move(code)),
      field_(std::move(field)),
      details_(std::move(details))
{
}

json ServiceError::to_json() const
{
    json j{{"code", code_}, {"message", what()}};
    if (field_) j["field"] = *field_;
    if (!details_.is_null()) j["errors"] = details_;
    return j;
}

double live_uniform(std::uint64_t seed, int t)
{
    rng::CounterStream s(rng::derive_key(seed, 1), static_cast<std::uint64_t>(t - 1));
    return s.uniform();
}

namespace {

std::string timestamp()
{
    using namespace std::chrono;
    const auto now = system_clock::now();
    const std::time_t secs = system_clock::to_time_t(now);
    const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[40];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[48];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

std::uint64_t random_u64()
{
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

Status status_of(const TrialSession& s)
{
    if (s.stopped()) return Status::StoppedDecisive;
    if (static_cast<int>(s.records().size()) >= s.config().budget) return Status::BudgetExhausted;
    if (s.awaiting_outcome()) return Status::AwaitingOutcome;
    return Status::Enrolling;
}

json forecast_json(const dlm::Forecast& f) { return {{"f", f.f}, {"Q", f.Q}}; }

json posterior_json(const TrialSession& s)
{
    const auto& st = s.state();
    json m = json::array(), C = json::array();
    for (Eigen::Index i = 0; i < st.m.size(); ++i) {
        m.push_back(st.m(i));
        json row = json::array();
        for (Eigen::Index k = 0; k < st.C.cols(); ++k) row.push_back(st.C(i, k));
        C.push_back(std::move(row));
    }
    const auto& a = s.moments(Arm::A);
    const auto& b = s.moments(Arm::B);
    return {{"m", m},
            {"C", C},
            {"effect_B", st.m(1)},
            {"effect_B_sd", std::sqrt(std::max(0.0, st.C(1, 1)))},
            {"n_A", a.count()},
            {"n_B", b.count()},
            {"mean_y_A", a.count() ? json(a.mean()) : json()},
            {"mean_y_B", b.count() ? json(b.mean()) : json()}};
}

}  // namespace

struct TrialService::Live {
    std::string id;
    std::uint64_t seed = 0;
    TrialSession session;
    std::filesystem::path path;
    int fd = -1;
    std::uint64_t seq = 0;
    mutable std::mutex mutex;

    Live(std::string id_, TrialConfig cfg, std::filesystem::path p)
        : id(std::move(id_)), seed(cfg.seed), session(std::move(cfg)), path(std::move(p))
    {
    }
    ~Live()
    {
        if (fd >= 0) ::close(fd);
    }

    void open_for_append()
    {
        fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
        if (fd < 0) {
            throw ServiceError(500, "storage", "cannot open " + path.string() + ": " + std::strerror(errno));
        }
    }

    // Write-ahead: the caller only applies the change after this returns.
    void append(std::string_view kind, json payload)
    {
        json ev{{"seq", seq + 1}, {"kind", kind}, {"ts", timestamp()}, {"trial_id", id},
                {"payload", std::move(payload)}};
        const std::string line = ev.dump() + "\n";
        std::size_t done = 0;
        while (done < line.size()) {
            const ssize_t n = ::write(fd, line.data() + done, line.size() - done);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw ServiceError(500, "storage", "append to " + path.string() + " failed: " + std::strerror(errno));
            }
            done += static_cast<std::size_t>(n);
        }
        if (::fsync(fd) != 0) {
            throw ServiceError(500, "storage", "fsync of " + path.string() + " failed: " + std::strerror(errno));
        }
        ++seq;
    }
};

TrialService::TrialService(std::filesystem::path state_dir) : dir_(std::move(state_dir))
{
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw std::runtime_error("cannot create state dir " + dir_.string() + ": " + ec.message());
    load_all();
}

TrialService::~TrialService() = default;

std::filesystem::path TrialService::log_path(const std::string& id) const
{
    return dir_ / (id + ".jsonl");
}

TrialService::Live& TrialService::find(const std::string& id) const
{
    std::shared_lock lock(registry_mutex_);
    const auto it = trials_.find(id);
    if (it == trials_.end()) throw ServiceError(404, "not_found", "no trial with id '" + id + "'");
    return *it->second;
}

std::vector<std::string> TrialService::trial_ids() const
{
    std::shared_lock lock(registry_mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, t] : trials_) ids.push_back(id);
    return ids;
}

json TrialService::create_trial(const json& body)
{
    TrialConfig cfg;
    try {
        cfg = config::from_json(body.is_null() ? json::object() : body);
    } catch (const FieldConfigError& e) {
        throw ServiceError(422, "invalid_config", e.what(), e.field());
    } catch (const ConfigError& e) {
        throw ServiceError(422, "invalid_config", e.what());
    }
    const auto errors = check(cfg);
    if (!errors.empty()) {
        json details = json::array();
        for (const auto& e : errors) details.push_back({{"field", e.field}, {"message", e.message}});
        throw ServiceError(422, "invalid_config", errors.front().field + ": " + errors.front().message,
                           errors.front().field, details);
    }
    if (!body.is_object() || !body.contains("seed")) cfg.seed = random_u64();

    std::unique_lock lock(registry_mutex_);
    std::string id;
    do {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(random_u64()));
        id = buf;
    } while (trials_.count(id) || std::filesystem::exists(log_path(id)));

    auto live = std::make_unique<Live>(id, cfg, log_path(id));
    live->open_for_append();
    live->append("CREATED", {{"config", config::to_json(cfg)}});
    // make the new directory entry durable too
    if (const int dfd = ::open(dir_.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC); dfd >= 0) {
        ::fsync(dfd);
        ::close(dfd);
    }
    const json out{{"trial_id", id}, {"status", to_string(status_of(live->session))}, {"config", config::to_json(cfg)}};
    trials_.emplace(id, std::move(live));
    return out;
}

json TrialService::enroll(const std::string& id, double x)
{
    Live& live = find(id);
    std::lock_guard lock(live.mutex);
    const Status st = status_of(live.session);
    if (st != Status::Enrolling) {
        throw ServiceError(409, "conflict",
                           "trial is " + std::string(to_string(st)) + "; enrollment needs ENROLLING");
    }
    if (!std::isfinite(x) || x < 0.0 || x > 1.0) {
        throw ServiceError(422, "invalid_input", "covariate x must lie in [0, 1]", "x");
    }
    const int t = live.session.next_index();
    const double u = live_uniform(live.seed, t);

    TrialSession next = live.session;
    const Arm arm = next.allocate(x, u);
    const Proposal& p = *next.pending();

    live.append("ENROLLED", {{"t", t}, {"x", x}});
    live.append("ALLOCATED",
                {{"t", t}, {"u", u}, {"wA", p.weight.wA}, {"arm", std::string(to_string(arm))}});
    live.session = std::move(next);

    const Proposal& q = *live.session.pending();
    return {{"t", t},
            {"wA", q.weight.wA},
            {"wB", q.weight.wB},
            {"arm", to_string(arm)},
            {"rule", to_string(q.weight.rule)},
            {"forecast_A", forecast_json(q.forecast_A)},
            {"forecast_B", forecast_json(q.forecast_B)},
            {"status", to_string(status_of(live.session))}};
}

json TrialService::record_outcome(const std::string& id, int t, double y)
{
    Live& live = find(id);
    std::lock_guard lock(live.mutex);
    if (!live.session.awaiting_outcome()) {
        throw ServiceError(409, "conflict", "no patient is awaiting an outcome (status " +
                                                std::string(to_string(status_of(live.session))) + ")");
    }
    const int pending_t = live.session.pending()->t;
    if (t != pending_t) {
        throw ServiceError(409, "conflict",
                           "patient " + std::to_string(pending_t) + " is awaiting an outcome, not " + std::to_string(t),
                           "t");
    }
    if (!std::isfinite(y)) throw ServiceError(422, "invalid_input", "outcome y must be finite", "y");

    TrialSession next = live.session;
    OutcomeResult r;
    try {
        r = next.observe(y);
    } catch (const NumericError& e) {
        throw ServiceError(422, "numeric", e.what(), "y");
    }
    live.append("OUTCOME", {{"t", t}, {"y", y}, {"bf", r.bf ? json(*r.bf) : json()}});
    const Status st = status_of(next);
    if (st == Status::StoppedDecisive || st == Status::BudgetExhausted) {
        live.append("STOPPED", {{"t", t}, {"reason", st == Status::StoppedDecisive ? "decisive" : "budget"}});
    }
    live.session = std::move(next);

    return {{"t", t},
            {"bf", r.bf ? json(*r.bf) : json()},
            {"decisive", r.decisive},
            {"status", to_string(st)},
            {"posterior_summary", posterior_json(live.session)}};
}

json TrialService::get_trial(const std::string& id) const
{
    Live& live = find(id);
    std::lock_guard lock(live.mutex);
    const auto& s = live.session;
    json records = json::array(), weights = json::array(), bfs = json::array();
    for (const auto& r : s.records()) {
        records.push_back({{"t", r.t},
                           {"x", r.x},
                           {"wA", r.wA},
                           {"arm", to_string(r.arm)},
                           {"y", r.y},
                           {"bf", r.bf ? json(*r.bf) : json()}});
        weights.push_back(r.wA);
        bfs.push_back(r.bf ? json(*r.bf) : json());
    }
    const Status st = status_of(s);
    json out{{"trial_id", live.id},
             {"status", to_string(st)},
             {"config", config::to_json(s.config())},
             {"records", records},
             {"weight_trajectory", weights},
             {"bf_trajectory", bfs},
             {"last_bf", s.last_bf() ? json(*s.last_bf()) : json()},
             {"next_t", s.next_index()},
             {"posterior_summary", posterior_json(s)}};
    if (s.awaiting_outcome()) {
        const auto& p = *s.pending();
        out["awaiting_t"] = p.t;
        out["pending"] = {{"t", p.t}, {"x", p.x}, {"wA", p.weight.wA}, {"arm", to_string(s.pending_arm())}};
    } else {
        out["awaiting_t"] = nullptr;
    }
    return out;
}

TrialSession TrialService::session_snapshot(const std::string& id) const
{
    Live& live = find(id);
    std::lock_guard lock(live.mutex);
    return live.session;
}

void TrialService::load_all()
{
    std::vector<std::filesystem::path> logs;
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") logs.push_back(entry.path());
    }
    std::sort(logs.begin(), logs.end());

    for (const auto& path : logs) {
        const std::string id = path.stem().string();
        std::ifstream in(path, std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        const std::string text = buf.str();

        std::unique_ptr<Live> live;
        double enrolled_x = 0.0;
        bool have_enrolled = false;
        std::size_t good_end = 0;  // byte offset after the last applied line
        std::string problem;
        std::size_t pos = 0;
        int line_no = 0;
        while (pos < text.size()) {
            const auto nl = text.find('\n', pos);
            const bool complete = nl != std::string::npos;
            const std::string line = text.substr(pos, complete ? nl - pos : std::string::npos);
            ++line_no;
            const std::size_t line_end = complete ? nl + 1 : text.size();
            json ev;
            try {
                ev = json::parse(line);
            } catch (const json::exception&) {
                if (!complete || line_end == text.size()) {
                    recovery_notes_.push_back(path.string() + ": dropped torn final line " + std::to_string(line_no));
                    break;
                }
                problem = "unparseable line " + std::to_string(line_no);
                break;
            }
            try {
                const std::string kind = ev.at("kind").get<std::string>();
                const std::uint64_t seq = ev.at("seq").get<std::uint64_t>();
                const json& p = ev.at("payload");
                if (!live) {
                    if (kind != "CREATED") throw std::runtime_error("first event is " + kind);
                    TrialConfig cfg = config::from_json(p.at("config"));
                    live = std::make_unique<Live>(id, cfg, path);
                } else if (seq != live->seq + 1) {
                    throw std::runtime_error("seq " + std::to_string(seq) + " after " + std::to_string(live->seq));
                } else if (kind == "ENROLLED") {
                    if (p.at("t").get<int>() != live->session.next_index() || live->session.awaiting_outcome()) {
                        throw std::runtime_error("ENROLLED out of order");
                    }
                    enrolled_x = p.at("x").get<double>();
                    have_enrolled = true;
                } else if (kind == "ALLOCATED") {
                    if (!have_enrolled || p.at("t").get<int>() != live->session.next_index()) {
                        throw std::runtime_error("ALLOCATED without matching ENROLLED");
                    }
                    const Arm arm = live->session.allocate(enrolled_x, p.at("u").get<double>());
                    if (std::string(to_string(arm)) != p.at("arm").get<std::string>()) {
                        throw std::runtime_error("replayed arm differs from logged arm");
                    }
                    have_enrolled = false;
                } else if (kind == "OUTCOME") {
                    if (!live->session.awaiting_outcome() || live->session.pending()->t != p.at("t").get<int>()) {
                        throw std::runtime_error("OUTCOME without pending patient");
                    }
                    live->session.observe(p.at("y").get<double>());
                } else if (kind == "STOPPED") {
                    const Status st = status_of(live->session);
                    if (st != Status::StoppedDecisive && st != Status::BudgetExhausted) {
                        throw std::runtime_error("STOPPED on a running trial");
                    }
                } else {
                    throw std::runtime_error("unknown event kind " + kind);
                }
                live->seq = seq;
            } catch (const std::exception& e) {
                problem = "line " + std::to_string(line_no) + ": " + e.what();
                break;
            }
            good_end = line_end;
            pos = line_end;
        }

        if (!problem.empty() || !live) {
            recovery_notes_.push_back(path.string() + ": skipped (" + (problem.empty() ? "empty log" : problem) + ")");
            continue;
        }
        if (good_end < text.size()) {
            std::error_code ec;
            std::filesystem::resize_file(path, good_end, ec);
            if (ec) {
                recovery_notes_.push_back(path.string() + ": skipped (cannot truncate torn tail: " + ec.message() + ")");
                continue;
            }
        }
        live->open_for_append();
        trials_.emplace(id, std::move(live));
    }
}

}  // namespace adaptrial::service
