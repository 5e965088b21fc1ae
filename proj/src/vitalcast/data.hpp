#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vitalcast {

/// Vital-sign channels, in data-file column order.
enum class Channel { HR = 0, MBP = 1, RR = 2 };
inline constexpr std::size_t kNumChannels = 3;

const char* channel_name(Channel c);
Channel channel_from_name(const std::string& name);

/// Fixed clinical bounds used for clipping and min-max scaling. Scaling is
/// deterministic and independent of the data seen.
struct ChannelBounds {
    double lo;
    double hi;
};
ChannelBounds channel_bounds(Channel c);

double scale_value(double v, Channel c);   // clamp to bounds, then map to [0,1]
double unscale_value(double v, Channel c); // inverse map (no clamping)

/// One patient's regularly sampled series on a 5-minute grid. Cells are
/// optional: a missing value is a gap. `scaled` guards against scaling twice.
struct PatientSeries {
    std::string patient_id;
    std::vector<std::int64_t> timestamps; // minutes, strictly increasing, step 5
    std::array<std::vector<std::optional<double>>, kNumChannels> channels;
    bool scaled = false;

    std::size_t length() const { return timestamps.size(); }
};

/// One training example. `input` is row-major with `channels().size()` rows of
/// length `history`; row 0 is always the target channel, remaining rows follow
/// the covariate order.
struct Window {
    std::string patient_id;
    std::size_t start = 0; // index of the first input step within the series
    std::vector<double> input;
    std::vector<double> target;
};

struct WindowSet {
    Channel target = Channel::HR;
    std::vector<Channel> covariates;
    std::size_t history = 0;
    std::size_t horizon = 0;
    std::vector<Window> windows;

    std::size_t num_channels() const { return 1 + covariates.size(); }
};

struct SplitDataset {
    WindowSet train;
    WindowSet val;
    WindowSet test;
};

/// Parses a long-format CSV with header `patient_id,timestamp_min,HR,MBP,RR`,
/// one row per 5-minute tick, empty cells meaning missing. Rows are grouped by
/// patient_id and sorted by timestamp; a duplicated timestamp keeps the last
/// row. Malformed input raises ParseError naming the 1-based line.
std::vector<PatientSeries> load_series_csv(const std::string& path);

/// Writes the same format, one row per timestep, missing cells empty.
void write_series_csv(const std::string& path, const std::vector<PatientSeries>& series);

/// Forward fill then backward fill, per channel. A channel with no readings at
/// all stays missing; windowing rejects it later.
PatientSeries impute_fill(const PatientSeries& series);

/// Clamp every value to its channel bounds and min-max scale to [0,1].
/// Scaling an already-scaled series is a usage error: raises ConfigError.
PatientSeries clip_and_scale(const PatientSeries& series);

/// Cuts consecutive non-overlapping segments of length history+horizon from
/// the start of a scaled series. Segments touching a still-missing cell in any
/// selected channel are dropped. A short series gives an empty list.
std::vector<Window> make_windows(const PatientSeries& series, Channel target,
                                 const std::vector<Channel>& covariates, std::size_t history,
                                 std::size_t horizon);

/// make_windows over a whole cohort, concatenated in patient order.
WindowSet build_windows(const std::vector<PatientSeries>& cohort, Channel target,
                        const std::vector<Channel>& covariates, std::size_t history,
                        std::size_t horizon);

/// Patient-level split: distinct patient_ids are shuffled with a seeded PRNG
/// and partitioned by cumulative ratio over the patient count, so every window
/// of a patient lands in exactly one split. Fewer than three patients puts
/// everything in train and warns on stderr.
SplitDataset split_patients(const WindowSet& windows, std::uint64_t seed, double train_ratio = 0.8,
                            double val_ratio = 0.1);

/// Synthetic vital-sign generator (raw units). Heart rate is a slow sinusoid
/// plus AR(1) noise; blood pressure and respiratory rate couple to it. A
/// fraction of patients deteriorate: HR ramps up and MBP down over three
/// hours from a random onset, then holds. A small fraction of cells is then
/// masked missing. Fully determined by the seed.
struct GeneratorOptions {
    std::size_t patients = 10;
    std::size_t hours = 9; // 12 steps per hour at the 5-minute cadence
    std::uint64_t seed = 0;
    double event_fraction = 0.3;
    double missing_fraction = 0.02;
};

std::vector<PatientSeries> generate_synthetic(const GeneratorOptions& opt);

} // namespace vitalcast
