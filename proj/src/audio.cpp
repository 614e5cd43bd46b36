#include "speeji/audio.hpp"
#include "speeji/errors.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <fftw3.h>
#include <fmt/format.h>

namespace speeji {

AudioClip::AudioClip(std::vector<float> samples, std::uint32_t sample_rate)
    : samples_(std::move(samples)), rate_(sample_rate) {
    if (samples_.empty()) throw InputError("audio clip has no samples");
    if (rate_ == 0) throw InputError("audio clip sample rate is zero");
    for (float& x : samples_) {
        if (!std::isfinite(x)) throw InputError("audio clip contains non-finite samples");
        x = std::clamp(x, -1.0F, 1.0F);
    }
}

std::pair<std::size_t, std::size_t> AudioClip::sample_range(const TimeSpan& span) const {
    const double eps = 1e-9;
    if (!(span.start_s >= -eps && span.end_s > span.start_s && span.end_s <= duration_s() + eps)) {
        throw InputError(fmt::format("span [{}, {}] outside clip of {} s", span.start_s,
                                     span.end_s, duration_s()));
    }
    const auto n = static_cast<long long>(samples_.size());
    auto first = std::clamp(std::llround(span.start_s * rate_), 0LL, n - 1);
    auto last = std::clamp(std::llround(span.end_s * rate_), first + 1, n);
    return {static_cast<std::size_t>(first), static_cast<std::size_t>(last)};
}

std::vector<ChunkSpan> chunk_spans(double duration_s, double chunk_s) {
    if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
        throw InputError(fmt::format("duration must be positive, got {}", duration_s));
    }
    if (!(chunk_s > 0.0) || !std::isfinite(chunk_s)) {
        throw InputError(fmt::format("chunk length must be positive, got {}", chunk_s));
    }

    // Guard against 1.4999999999 / 0.5 style quotients landing just below an
    // integer.
    auto full = static_cast<std::size_t>(std::floor(duration_s / chunk_s + 1e-9));
    while (full > 0 && static_cast<double>(full) * chunk_s > duration_s) --full;

    std::vector<ChunkSpan> spans;
    if (full == 0) {
        spans.push_back({0.0, duration_s, 0});
        return spans;
    }
    spans.reserve(full + 1);
    for (std::size_t i = 0; i < full; ++i) {
        spans.push_back({static_cast<double>(i) * chunk_s, static_cast<double>(i + 1) * chunk_s, i});
    }
    const double remainder = duration_s - spans.back().end_s;
    if (remainder >= chunk_s / 2.0) {
        spans.push_back({spans.back().end_s, duration_s, full});
    } else {
        spans.back().end_s = duration_s;
    }
    return spans;
}

std::vector<WaveBar> wave_bars(const AudioClip& clip) {
    const auto samples = clip.samples();
    const std::size_t n = samples.size();
    const double rate = clip.sample_rate();
    const double duration = clip.duration_s();
    const auto bar_samples =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(kBarSeconds * rate)));

    // Sample boundaries of each bar.
    std::vector<std::size_t> edges;
    std::vector<std::pair<double, double>> times;
    if (n <= kMaxBars * bar_samples) {
        const std::size_t count = (n + bar_samples - 1) / bar_samples;
        for (std::size_t i = 0; i <= count; ++i) edges.push_back(std::min(n, i * bar_samples));
        for (std::size_t i = 0; i < count; ++i) {
            times.emplace_back(i * kBarSeconds, std::min(duration, (i + 1) * kBarSeconds));
        }
    } else {
        const double bar_s = duration / kMaxBars;
        for (std::size_t i = 0; i <= kMaxBars; ++i) edges.push_back(i * n / kMaxBars);
        for (std::size_t i = 0; i < kMaxBars; ++i) {
            times.emplace_back(i * bar_s, i + 1 == kMaxBars ? duration : (i + 1) * bar_s);
        }
    }

    std::vector<double> peaks(times.size(), 0.0);
    double global = 0.0;
    for (std::size_t b = 0; b < peaks.size(); ++b) {
        for (std::size_t i = edges[b]; i < edges[b + 1]; ++i) {
            peaks[b] = std::max(peaks[b], static_cast<double>(std::fabs(samples[i])));
        }
        global = std::max(global, peaks[b]);
    }

    std::vector<WaveBar> bars(times.size());
    for (std::size_t b = 0; b < bars.size(); ++b) {
        bars[b].start_s = times[b].first;
        bars[b].end_s = times[b].second;
        bars[b].height = global > 0.0 ? std::max(kBarFloor, peaks[b] / global) : kBarFloor;
    }
    return bars;
}

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

double spectral_centroid(std::span<const float> x, double rate) {
    const std::size_t n = x.size();
    const std::size_t bins = n / 2 + 1;
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(bins);
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    }
    std::copy(x.begin(), x.end(), in);
    fftw_execute(plan);

    double weighted = 0.0;
    double total = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
        const double mag = std::hypot(out[k][0], out[k][1]);
        weighted += mag * (static_cast<double>(k) * rate / static_cast<double>(n));
        total += mag;
    }
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return total > 0.0 ? weighted / total : 0.0;
}

}  // namespace

AcousticFeatures features(const AudioClip& clip, const TimeSpan& span) {
    const auto [first, last] = clip.sample_range(span);
    const auto all = clip.samples();
    const auto x = all.subspan(first, last - first);
    const double rate = clip.sample_rate();
    const double seconds = static_cast<double>(x.size()) / rate;

    double energy = 0.0;
    for (float s : x) energy += static_cast<double>(s) * s;
    const double rms = std::sqrt(energy / static_cast<double>(x.size()));

    // A crossing is counted at sample i when its sign differs from sample
    // i - 1, looking one sample before the span when there is one.
    std::size_t crossings = 0;
    for (std::size_t i = std::max<std::size_t>(first, 1); i < last; ++i) {
        crossings += (all[i] >= 0.0F) != (all[i - 1] >= 0.0F);
    }

    AcousticFeatures f;
    f.rms_dbfs = std::min(0.0, 20.0 * std::log10(rms + 1e-9));
    f.spectral_centroid_hz = std::clamp(spectral_centroid(x, rate), 0.0, rate / 2.0);
    f.zero_crossings_per_s = static_cast<double>(crossings) / seconds;
    return f;
}

}  // namespace speeji
