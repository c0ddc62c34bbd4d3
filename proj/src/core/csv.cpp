#include "core/csv.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "core/errors.hpp"
#include "core/smoother.hpp"

namespace drcut {

namespace {

std::ofstream open_write(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << std::setprecision(17);
    return out;
}

std::ifstream open_read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    return in;
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t line, const std::string& msg) {
    throw ParseError(path + ":" + std::to_string(line) + ": " + msg);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        parse_fail(path, line, "bad number '" + s + "'");
    }
}

long parse_long(const std::string& s, const std::string& path, std::size_t line) {
    try {
        std::size_t used = 0;
        long v = std::stol(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        parse_fail(path, line, "bad integer '" + s + "'");
    }
}

}  // namespace

void write_cohort_csv(const std::string& path, const std::vector<ObservedSubject>& data) {
    bool with_treatment =
        std::any_of(data.begin(), data.end(), [](const auto& s) { return s.treatment.has_value(); });
    auto out = open_write(path);
    out << "id,w,time,event,state" << (with_treatment ? ",treatment" : "") << '\n';
    auto row = [&](const ObservedSubject& s, double time, const char* event, int state) {
        out << s.id << ',' << s.w << ',' << time << ',' << event << ',' << state;
        if (with_treatment) {
            out << ',';
            if (s.treatment) out << *s.treatment;
        }
        out << '\n';
    };
    for (const auto& s : data) {
        if (s.jumps.empty() || s.jumps.front().time != 0.0 || s.jumps.front().state != 1)
            throw InvalidArgument("cohort csv: subject " + std::to_string(s.id) +
                                  " does not start healthy at time 0");
        row(s, 0.0, "entry", 1);
        for (std::size_t j = 1; j < s.jumps.size(); ++j)
            row(s, s.jumps[j].time, "jump", s.jumps[j].state);
        row(s, s.c, s.censored ? "censor" : "end", s.state_before(s.c));
    }
}

std::vector<ObservedSubject> read_cohort_csv(const std::string& path, double eta) {
    auto in = open_read(path);
    std::string line;
    std::size_t lineno = 0;

    if (!std::getline(in, line)) parse_fail(path, 1, "empty file");
    ++lineno;
    auto header = split_fields(line);
    bool with_treatment = false;
    if (header == std::vector<std::string>{"id", "w", "time", "event", "state"}) {
        with_treatment = false;
    } else if (header ==
               std::vector<std::string>{"id", "w", "time", "event", "state", "treatment"}) {
        with_treatment = true;
    } else {
        parse_fail(path, lineno, "unexpected cohort header '" + line + "'");
    }
    std::size_t ncols = with_treatment ? 6 : 5;

    std::vector<ObservedSubject> out;
    bool open_subject = false;  // current subject still lacks its terminal row
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto f = split_fields(line);
        if (f.size() != ncols)
            parse_fail(path, lineno, "expected " + std::to_string(ncols) + " fields, got " +
                                         std::to_string(f.size()));
        long id = parse_long(f[0], path, lineno);
        double w = parse_double(f[1], path, lineno);
        double time = parse_double(f[2], path, lineno);
        const std::string& event = f[3];
        int state = static_cast<int>(parse_long(f[4], path, lineno));

        if (event == "entry") {
            if (open_subject) parse_fail(path, lineno, "entry row before previous subject ended");
            if (time != 0.0 || state != 1)
                parse_fail(path, lineno, "entry row must be time 0, state 1");
            ObservedSubject s;
            s.id = id;
            s.w = w;
            s.jumps.push_back({0.0, 1});
            if (with_treatment && !f[5].empty())
                s.treatment = static_cast<int>(parse_long(f[5], path, lineno));
            out.push_back(std::move(s));
            open_subject = true;
            continue;
        }
        if (!open_subject || out.back().id != id)
            parse_fail(path, lineno, "row for subject " + std::to_string(id) +
                                         " outside its entry..terminal block");
        ObservedSubject& s = out.back();
        if (s.w != w) parse_fail(path, lineno, "covariate changes within subject");
        if (event == "jump") {
            s.jumps.push_back({time, state});
        } else if (event == "censor" || event == "end") {
            s.c = time;
            s.censored = (event == "censor");
            open_subject = false;
        } else {
            parse_fail(path, lineno, "unknown event '" + event + "'");
        }
    }
    if (open_subject) parse_fail(path, lineno, "last subject has no terminal row");
    for (const auto& s : out) {
        try {
            validate_subject(s, eta);
        } catch (const Error& e) {
            throw ParseError(path + ": subject " + std::to_string(s.id) + ": " + e.what());
        }
    }
    return out;
}

void write_pseudo_csv(const std::string& path, const std::vector<PseudoOutcome>& pseudo) {
    auto out = open_write(path);
    out << "id,w,variant,value,censoring_kind,outcome_kind\n";
    for (const auto& p : pseudo)
        out << p.id << ',' << p.w << ',' << variant_name(p.variant) << ',' << p.value << ','
            << p.censoring_kind << ',' << p.outcome_kind << '\n';
}

std::vector<PseudoOutcome> read_pseudo_csv(const std::string& path) {
    auto in = open_read(path);
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) parse_fail(path, 1, "empty file");
    ++lineno;
    if (split_fields(line) !=
        std::vector<std::string>{"id", "w", "variant", "value", "censoring_kind", "outcome_kind"})
        parse_fail(path, lineno, "unexpected pseudo-outcome header '" + line + "'");
    std::vector<PseudoOutcome> out;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto f = split_fields(line);
        if (f.size() != 6)
            parse_fail(path, lineno, "expected 6 fields, got " + std::to_string(f.size()));
        PseudoOutcome p;
        p.id = parse_long(f[0], path, lineno);
        p.w = parse_double(f[1], path, lineno);
        try {
            p.variant = variant_from_name(f[2]);
        } catch (const Error& e) {
            parse_fail(path, lineno, e.what());
        }
        p.value = parse_double(f[3], path, lineno);
        p.censoring_kind = f[4];
        p.outcome_kind = f[5];
        out.push_back(std::move(p));
    }
    return out;
}

void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve,
                     double level) {
    if (!(level > 0.0) || !(level < 1.0))
        throw InvalidArgument("curve csv: confidence level must lie in (0, 1)");
    double z = normal_quantile(0.5 + level / 2.0);
    auto out = open_write(path);
    out << "w,estimate,se,ci_lo,ci_hi\n";
    for (const auto& p : curve)
        out << p.w << ',' << p.estimate << ',' << p.se << ',' << p.estimate - z * p.se << ','
            << p.estimate + z * p.se << '\n';
}

}  // namespace drcut
