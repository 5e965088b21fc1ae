#include "vitalcast/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "vitalcast/error.hpp"
#include "vitalcast/rng.hpp"

namespace vitalcast {

const char* channel_name(Channel c) {
    switch (c) {
    case Channel::HR: return "HR";
    case Channel::MBP: return "MBP";
    case Channel::RR: return "RR";
    }
    throw ConfigError("unknown channel value");
}

Channel channel_from_name(const std::string& name) {
    if (name == "HR") return Channel::HR;
    if (name == "MBP") return Channel::MBP;
    if (name == "RR") return Channel::RR;
    throw ConfigError("unknown channel name: '" + name + "' (expected HR, MBP, or RR)");
}

ChannelBounds channel_bounds(Channel c) {
    switch (c) {
    case Channel::HR: return {0.0, 300.0};
    case Channel::MBP: return {0.0, 190.0};
    case Channel::RR: return {0.0, 100.0};
    }
    throw ConfigError("unknown channel value");
}

double scale_value(double v, Channel c) {
    const ChannelBounds b = channel_bounds(c);
    const double clamped = std::min(std::max(v, b.lo), b.hi);
    return (clamped - b.lo) / (b.hi - b.lo);
}

double unscale_value(double v, Channel c) {
    const ChannelBounds b = channel_bounds(c);
    return b.lo + v * (b.hi - b.lo);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double_field(const std::string& s, std::size_t line_no, const char* what) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || !std::isfinite(v))
        throw ParseError("line " + std::to_string(line_no) + ": non-numeric " + what + " '" + s +
                         "'");
    return v;
}

std::int64_t parse_int_field(const std::string& s, std::size_t line_no, const char* what) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const long long v = std::strtoll(begin, &end, 10);
    if (end == begin || *end != '\0')
        throw ParseError("line " + std::to_string(line_no) + ": non-integer " + what + " '" + s +
                         "'");
    return static_cast<std::int64_t>(v);
}

struct RawRow {
    std::int64_t timestamp;
    std::array<std::optional<double>, kNumChannels> cells;
    std::size_t line_no;
};

} // namespace

std::vector<PatientSeries> load_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");

    std::string line;
    if (!std::getline(in, line)) throw ParseError("line 1: empty file, expected header");
    {
        const auto header = split_fields(line);
        const std::vector<std::string> expected = {"patient_id", "timestamp_min", "HR", "MBP",
                                                   "RR"};
        if (std::vector<std::string>(header.begin(), header.end()) != expected)
            throw ParseError("line 1: malformed header '" + line +
                             "', expected patient_id,timestamp_min,HR,MBP,RR");
    }

    // Collect rows per patient in first-appearance order.
    std::vector<std::string> order;
    std::vector<std::vector<RawRow>> rows_by_patient;
    auto patient_slot = [&](const std::string& id) -> std::vector<RawRow>& {
        for (std::size_t i = 0; i < order.size(); ++i)
            if (order[i] == id) return rows_by_patient[i];
        order.push_back(id);
        rows_by_patient.emplace_back();
        return rows_by_patient.back();
    };

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_fields(line);
        if (fields.size() != 2 + kNumChannels)
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(2 + kNumChannels) + " fields, got " +
                             std::to_string(fields.size()));
        if (fields[0].empty())
            throw ParseError("line " + std::to_string(line_no) + ": empty patient_id");
        RawRow row;
        row.timestamp = parse_int_field(fields[1], line_no, "timestamp");
        row.line_no = line_no;
        for (std::size_t c = 0; c < kNumChannels; ++c) {
            const std::string& cell = fields[2 + c];
            if (cell.empty())
                row.cells[c] = std::nullopt;
            else
                row.cells[c] = parse_double_field(cell, line_no,
                                                  channel_name(static_cast<Channel>(c)));
        }
        patient_slot(fields[0]).push_back(row);
    }

    std::vector<PatientSeries> out;
    out.reserve(order.size());
    for (std::size_t p = 0; p < order.size(); ++p) {
        auto& rows = rows_by_patient[p];
        std::stable_sort(rows.begin(), rows.end(),
                         [](const RawRow& a, const RawRow& b) { return a.timestamp < b.timestamp; });
        // Duplicate timestamps: the later row in file order wins.
        std::vector<RawRow> dedup;
        for (const auto& r : rows) {
            if (!dedup.empty() && dedup.back().timestamp == r.timestamp)
                dedup.back() = r;
            else
                dedup.push_back(r);
        }
        for (std::size_t i = 1; i < dedup.size(); ++i) {
            if (dedup[i].timestamp - dedup[i - 1].timestamp != 5)
                throw ParseError("line " + std::to_string(dedup[i].line_no) +
                                 ": timestamps must advance by 5 minutes, got step " +
                                 std::to_string(dedup[i].timestamp - dedup[i - 1].timestamp) +
                                 " for patient '" + order[p] + "'");
        }
        PatientSeries s;
        s.patient_id = order[p];
        s.timestamps.reserve(dedup.size());
        for (auto& ch : s.channels) ch.reserve(dedup.size());
        for (const auto& r : dedup) {
            s.timestamps.push_back(r.timestamp);
            for (std::size_t c = 0; c < kNumChannels; ++c) s.channels[c].push_back(r.cells[c]);
        }
        out.push_back(std::move(s));
    }
    return out;
}

void write_series_csv(const std::string& path, const std::vector<PatientSeries>& series) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "patient_id,timestamp_min,HR,MBP,RR\n";
    char buf[64];
    for (const auto& s : series) {
        for (std::size_t t = 0; t < s.length(); ++t) {
            out << s.patient_id << ',' << s.timestamps[t];
            for (std::size_t c = 0; c < kNumChannels; ++c) {
                out << ',';
                if (s.channels[c][t]) {
                    std::snprintf(buf, sizeof(buf), "%.17g", *s.channels[c][t]);
                    out << buf;
                }
            }
            out << '\n';
        }
    }
    if (!out) throw IoError("failed while writing '" + path + "'");
}

PatientSeries impute_fill(const PatientSeries& series) {
    PatientSeries out = series;
    for (auto& column : out.channels) {
        std::optional<double> last;
        for (auto& cell : column) {
            if (cell)
                last = cell;
            else if (last)
                cell = last;
        }
        // Backward pass covers a leading gap. An all-missing column has no
        // anchor and stays missing.
        std::optional<double> next;
        for (std::size_t i = column.size(); i-- > 0;) {
            if (column[i])
                next = column[i];
            else if (next)
                column[i] = next;
        }
    }
    return out;
}

PatientSeries clip_and_scale(const PatientSeries& series) {
    if (series.scaled)
        throw ConfigError("series '" + series.patient_id + "' is already scaled");
    PatientSeries out = series;
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        const Channel ch = static_cast<Channel>(c);
        for (auto& cell : out.channels[c])
            if (cell) cell = scale_value(*cell, ch);
    }
    out.scaled = true;
    return out;
}

std::vector<Window> make_windows(const PatientSeries& series, Channel target,
                                 const std::vector<Channel>& covariates, std::size_t history,
                                 std::size_t horizon) {
    if (!series.scaled)
        throw UsageError("make_windows requires a scaled series (patient '" + series.patient_id +
                         "')");
    if (history == 0 || horizon == 0)
        throw ConfigError("history and horizon must be positive");
    for (Channel c : covariates)
        if (c == target)
            throw ConfigError(std::string("covariate duplicates the target channel ") +
                              channel_name(target));

    std::vector<Channel> selected;
    selected.push_back(target);
    selected.insert(selected.end(), covariates.begin(), covariates.end());

    const std::size_t span = history + horizon;
    std::vector<Window> out;
    for (std::size_t start = 0; start + span <= series.length(); start += span) {
        bool complete = true;
        for (Channel c : selected) {
            const auto& col = series.channels[static_cast<std::size_t>(c)];
            for (std::size_t t = start; t < start + span && complete; ++t)
                if (!col[t]) complete = false;
            if (!complete) break;
        }
        if (!complete) continue;

        Window w;
        w.patient_id = series.patient_id;
        w.start = start;
        w.input.reserve(selected.size() * history);
        for (Channel c : selected) {
            const auto& col = series.channels[static_cast<std::size_t>(c)];
            for (std::size_t t = start; t < start + history; ++t) w.input.push_back(*col[t]);
        }
        const auto& tcol = series.channels[static_cast<std::size_t>(target)];
        w.target.reserve(horizon);
        for (std::size_t t = start + history; t < start + span; ++t) w.target.push_back(*tcol[t]);
        out.push_back(std::move(w));
    }
    return out;
}

WindowSet build_windows(const std::vector<PatientSeries>& cohort, Channel target,
                        const std::vector<Channel>& covariates, std::size_t history,
                        std::size_t horizon) {
    WindowSet set;
    set.target = target;
    set.covariates = covariates;
    set.history = history;
    set.horizon = horizon;
    for (const auto& s : cohort) {
        auto ws = make_windows(s, target, covariates, history, horizon);
        for (auto& w : ws) set.windows.push_back(std::move(w));
    }
    return set;
}

SplitDataset split_patients(const WindowSet& windows, std::uint64_t seed, double train_ratio,
                            double val_ratio) {
    if (train_ratio <= 0.0 || val_ratio < 0.0 || train_ratio + val_ratio > 1.0)
        throw ConfigError("split ratios must satisfy 0 < train, 0 <= val, train+val <= 1");

    std::vector<std::string> patients;
    for (const auto& w : windows.windows)
        if (std::find(patients.begin(), patients.end(), w.patient_id) == patients.end())
            patients.push_back(w.patient_id);

    SplitDataset out;
    for (WindowSet* set : {&out.train, &out.val, &out.test}) {
        set->target = windows.target;
        set->covariates = windows.covariates;
        set->history = windows.history;
        set->horizon = windows.horizon;
    }

    const std::size_t p = patients.size();
    if (p < 3) {
        std::cerr << "warning: only " << p
                  << " patient(s); split is degenerate, assigning everything to train\n";
        out.train.windows = windows.windows;
        return out;
    }

    Rng rng(seed);
    shuffle(patients, rng);
    const std::size_t train_end = static_cast<std::size_t>(std::floor(train_ratio * p));
    const std::size_t val_end =
        static_cast<std::size_t>(std::floor((train_ratio + val_ratio) * p));

    auto bucket_of = [&](const std::string& id) -> WindowSet& {
        for (std::size_t i = 0; i < p; ++i) {
            if (patients[i] == id) {
                if (i < train_end) return out.train;
                if (i < val_end) return out.val;
                return out.test;
            }
        }
        throw UsageError("window references unknown patient '" + id + "'");
    };
    for (const auto& w : windows.windows) bucket_of(w.patient_id).windows.push_back(w);
    return out;
}

std::vector<PatientSeries> generate_synthetic(const GeneratorOptions& opt) {
    if (opt.patients == 0) throw ConfigError("generator needs at least one patient");
    if (opt.hours == 0) throw ConfigError("generator needs at least one hour");

    const std::size_t steps = opt.hours * 12;
    constexpr double rho = 0.9;        // AR(1) pole shared by all channels
    constexpr double ramp_steps = 36;  // three hours of drift

    std::vector<PatientSeries> out;
    out.reserve(opt.patients);
    for (std::size_t p = 0; p < opt.patients; ++p) {
        Rng rng(Rng::derive(opt.seed, p));

        // Draw order is part of the output contract: period, event flag,
        // onset (always drawn, used only when the event fires), then one
        // Gaussian per channel per step, then the missingness sweep.
        const double period_min = 120.0 + 30.0 * rng.next_double();
        const bool event = rng.next_double() < opt.event_fraction;
        const std::size_t onset = steps > 0 ? rng.next_below(steps) : 0;

        PatientSeries s;
        s.patient_id = "synth-" + std::to_string(p);
        s.timestamps.resize(steps);
        for (auto& ch : s.channels) ch.resize(steps);

        double ar_hr = 0.0, ar_mbp = 0.0, ar_rr = 0.0;
        for (std::size_t t = 0; t < steps; ++t) {
            s.timestamps[t] = static_cast<std::int64_t>(5 * t);
            ar_hr = rho * ar_hr + 1.0 * rng.next_gaussian();
            ar_mbp = rho * ar_mbp + 1.0 * rng.next_gaussian();
            ar_rr = rho * ar_rr + 0.5 * rng.next_gaussian();

            const double minutes = static_cast<double>(5 * t);
            double hr = 80.0 + 10.0 * std::sin(2.0 * std::numbers::pi * minutes / period_min) +
                        ar_hr;
            double mbp_drift = 0.0;
            if (event && t >= onset) {
                const double ramp =
                    std::min(1.0, static_cast<double>(t - onset) / ramp_steps);
                hr += 15.0 * ramp;
                mbp_drift = -12.0 * ramp;
            }
            const double mbp = 85.0 - 0.7 * (hr - 80.0) + ar_mbp + mbp_drift;
            const double rr = 16.0 + 0.05 * (hr - 80.0) + ar_rr;
            s.channels[0][t] = hr;
            s.channels[1][t] = mbp;
            s.channels[2][t] = rr;
        }

        for (std::size_t t = 0; t < steps; ++t)
            for (auto& ch : s.channels)
                if (rng.next_double() < opt.missing_fraction) ch[t] = std::nullopt;

        out.push_back(std::move(s));
    }
    return out;
}

} // namespace vitalcast
