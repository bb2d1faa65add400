#include "lff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "lff/error.hpp"

namespace lff {

std::vector<ClipShift> latent_drift(const Tensor& frames, std::int64_t clip_len) {
    if (frames.rank() < 1) throw DimensionError("latent drift: frames tensor must have rank >= 1");
    if (clip_len < 1) throw ConfigError("latent drift: clip_len must be >= 1");
    const std::int64_t total = frames.shape[0];
    const std::int64_t clips = total / clip_len;
    if (clips < 2) {
        throw ConfigError("latent drift: " + std::to_string(total) + " frames at clip_len " +
                          std::to_string(clip_len) + " give " + std::to_string(clips) +
                          " clips; need at least 2");
    }
    std::int64_t per_frame = 1;
    for (std::size_t i = 1; i < frames.shape.size(); ++i) per_frame *= frames.shape[i];
    const std::int64_t per_clip = per_frame * clip_len;

    std::vector<double> means(static_cast<std::size_t>(clips));
    std::vector<double> stds(static_cast<std::size_t>(clips));
    for (std::int64_t c = 0; c < clips; ++c) {
        const double* p = frames.data.data() + c * per_clip;
        double s = 0.0, s2 = 0.0;
        for (std::int64_t i = 0; i < per_clip; ++i) {
            s += p[i];
            s2 += p[i] * p[i];
        }
        const double mean = s / static_cast<double>(per_clip);
        const double var = std::max(0.0, s2 / static_cast<double>(per_clip) - mean * mean);
        means[static_cast<std::size_t>(c)] = mean;
        stds[static_cast<std::size_t>(c)] = std::sqrt(var);
    }
    std::vector<ClipShift> out(static_cast<std::size_t>(clips));
    for (std::int64_t c = 0; c < clips; ++c) {
        auto& row = out[static_cast<std::size_t>(c)];
        row.clip = c;
        row.mean_shift = std::fabs(means[static_cast<std::size_t>(c)] - means[0]);
        row.std_shift = std::fabs(stds[static_cast<std::size_t>(c)] - stds[0]);
    }
    return out;
}

namespace {

double srgb_to_linear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

struct Lab {
    double L, a, b;
};

double lab_f(double t) {
    constexpr double d = 6.0 / 29.0;
    return t > d * d * d ? std::cbrt(t) : t / (3.0 * d * d) + 4.0 / 29.0;
}

Lab rgb_to_lab(const std::array<double, 3>& rgb) {
    const double r = srgb_to_linear(rgb[0]);
    const double g = srgb_to_linear(rgb[1]);
    const double b = srgb_to_linear(rgb[2]);
    // sRGB primaries, D65 white, scaled to the conventional 0..100 range.
    const double x = 100.0 * (0.4124564 * r + 0.3575761 * g + 0.1804375 * b);
    const double y = 100.0 * (0.2126729 * r + 0.7151522 * g + 0.0721750 * b);
    const double z = 100.0 * (0.0193339 * r + 0.1191920 * g + 0.9503041 * b);
    const double fx = lab_f(x / 95.047);
    const double fy = lab_f(y / 100.0);
    const double fz = lab_f(z / 108.883);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

constexpr double kPi = 3.14159265358979323846;

double deg(double rad) { return rad * (180.0 / kPi); }
double rad(double d) { return d * (kPi / 180.0); }

double de00_lab(const Lab& p, const Lab& q) {
    const double c1 = std::hypot(p.a, p.b);
    const double c2 = std::hypot(q.a, q.b);
    const double cbar = 0.5 * (c1 + c2);
    const double cbar7 = std::pow(cbar, 7.0);
    const double pow25_7 = 6103515625.0;  // 25^7
    const double g = 0.5 * (1.0 - std::sqrt(cbar7 / (cbar7 + pow25_7)));
    const double a1p = (1.0 + g) * p.a;
    const double a2p = (1.0 + g) * q.a;
    const double c1p = std::hypot(a1p, p.b);
    const double c2p = std::hypot(a2p, q.b);
    auto hue = [](double a, double b) {
        if (a == 0.0 && b == 0.0) return 0.0;
        double h = deg(std::atan2(b, a));
        return h < 0.0 ? h + 360.0 : h;
    };
    const double h1p = hue(a1p, p.b);
    const double h2p = hue(a2p, q.b);

    const double dlp = q.L - p.L;
    const double dcp = c2p - c1p;
    double dhp = 0.0;
    if (c1p * c2p != 0.0) {
        dhp = h2p - h1p;
        if (dhp > 180.0) dhp -= 360.0;
        else if (dhp < -180.0) dhp += 360.0;
    }
    const double dHp = 2.0 * std::sqrt(c1p * c2p) * std::sin(rad(dhp) / 2.0);

    const double lbp = 0.5 * (p.L + q.L);
    const double cbp = 0.5 * (c1p + c2p);
    double hbp;
    if (c1p * c2p == 0.0) {
        hbp = h1p + h2p;
    } else if (std::fabs(h1p - h2p) <= 180.0) {
        hbp = 0.5 * (h1p + h2p);
    } else if (h1p + h2p < 360.0) {
        hbp = 0.5 * (h1p + h2p + 360.0);
    } else {
        hbp = 0.5 * (h1p + h2p - 360.0);
    }

    const double tterm = 1.0 - 0.17 * std::cos(rad(hbp - 30.0)) + 0.24 * std::cos(rad(2.0 * hbp)) +
                         0.32 * std::cos(rad(3.0 * hbp + 6.0)) -
                         0.20 * std::cos(rad(4.0 * hbp - 63.0));
    const double dtheta = 30.0 * std::exp(-((hbp - 275.0) / 25.0) * ((hbp - 275.0) / 25.0));
    const double cbp7 = std::pow(cbp, 7.0);
    const double rc = 2.0 * std::sqrt(cbp7 / (cbp7 + pow25_7));
    const double lm = (lbp - 50.0) * (lbp - 50.0);
    const double sl = 1.0 + 0.015 * lm / std::sqrt(20.0 + lm);
    const double sc = 1.0 + 0.045 * cbp;
    const double sh = 1.0 + 0.015 * cbp * tterm;
    const double rt = -std::sin(rad(2.0 * dtheta)) * rc;

    const double vl = dlp / sl;
    const double vc = dcp / sc;
    const double vh = dHp / sh;
    return std::sqrt(vl * vl + vc * vc + vh * vh + rt * vc * vh);
}

}  // namespace

double ciede2000(const std::array<double, 3>& rgb_a, const std::array<double, 3>& rgb_b) {
    for (int i = 0; i < 3; ++i) {
        if (!(rgb_a[i] >= 0.0 && rgb_a[i] <= 1.0) || !(rgb_b[i] >= 0.0 && rgb_b[i] <= 1.0)) {
            throw DomainError("ciede2000: sRGB channels must lie in [0, 1]");
        }
    }
    return de00_lab(rgb_to_lab(rgb_a), rgb_to_lab(rgb_b));
}

double frame_ciede(const Tensor& frame_a, const Tensor& frame_b) {
    if (frame_a.shape != frame_b.shape) {
        throw DimensionError("frame ciede: shapes " + frame_a.shape_str() + " and " +
                             frame_b.shape_str() + " disagree");
    }
    if (frame_a.rank() != 3 || frame_a.shape[0] != 3) {
        throw DimensionError("frame ciede: expected [3, H, W] frames, got " +
                             frame_a.shape_str());
    }
    const std::int64_t hw = frame_a.shape[1] * frame_a.shape[2];
    auto clamp01 = [](double v) { return std::min(1.0, std::max(0.0, v)); };
    double acc = 0.0;
    for (std::int64_t i = 0; i < hw; ++i) {
        std::array<double, 3> a{}, b{};
        for (int c = 0; c < 3; ++c) {
            a[static_cast<std::size_t>(c)] = clamp01(frame_a.data[static_cast<std::size_t>(c * hw + i)]);
            b[static_cast<std::size_t>(c)] = clamp01(frame_b.data[static_cast<std::size_t>(c * hw + i)]);
        }
        acc += de00_lab(rgb_to_lab(a), rgb_to_lab(b));
    }
    return acc / static_cast<double>(hw);
}

double sync_proxy(const RawAudioFeatures& audio, const Tensor& frames, const Tensor& lip_mask) {
    if (frames.rank() != 4) {
        throw DimensionError("sync proxy: expected [F, C, H, W] frames, got " +
                             frames.shape_str());
    }
    const std::int64_t f = frames.shape[0];
    const std::int64_t c = frames.shape[1];
    const std::int64_t h = frames.shape[2];
    const std::int64_t w = frames.shape[3];
    if (audio.frames() != f) {
        throw DimensionError("sync proxy: " + std::to_string(audio.frames()) +
                             " audio frames vs " + std::to_string(f) + " video frames");
    }
    if (lip_mask.shape != std::vector<std::int64_t>{h, w}) {
        throw DimensionError("sync proxy: lip mask " + lip_mask.shape_str() +
                             " does not match frame size [" + std::to_string(h) + ", " +
                             std::to_string(w) + "]");
    }
    std::vector<std::int64_t> on;
    for (std::int64_t i = 0; i < h * w; ++i) {
        if (lip_mask.data[static_cast<std::size_t>(i)] != 0.0) on.push_back(i);
    }
    if (on.empty()) throw ValidationError("sync proxy: lip mask selects no pixels");

    const std::vector<double> amp = amplitude(audio);
    std::vector<double> intensity(static_cast<std::size_t>(f));
    const std::int64_t hw = h * w;
    for (std::int64_t i = 0; i < f; ++i) {
        double s = 0.0;
        for (std::int64_t ch = 0; ch < c; ++ch) {
            const double* p = frames.data.data() + (i * c + ch) * hw;
            for (std::int64_t px : on) s += p[px];
        }
        intensity[static_cast<std::size_t>(i)] =
            s / static_cast<double>(c * static_cast<std::int64_t>(on.size()));
    }

    const double n = static_cast<double>(f);
    double ma = 0.0, mi = 0.0;
    for (std::int64_t i = 0; i < f; ++i) {
        ma += amp[static_cast<std::size_t>(i)];
        mi += intensity[static_cast<std::size_t>(i)];
    }
    ma /= n;
    mi /= n;
    double saa = 0.0, sii = 0.0, sai = 0.0;
    for (std::int64_t i = 0; i < f; ++i) {
        const double da = amp[static_cast<std::size_t>(i)] - ma;
        const double di = intensity[static_cast<std::size_t>(i)] - mi;
        saa += da * da;
        sii += di * di;
        sai += da * di;
    }
    if (saa == 0.0 || sii == 0.0) {
        throw UndefinedCorrelationError(
            "sync proxy: zero variance in the " +
            std::string(saa == 0.0 ? "audio amplitude" : "lip intensity") + " track");
    }
    return sai / std::sqrt(saa * sii);
}

std::vector<DriftReportRow> drift_report(const Tensor& frames, const RawAudioFeatures& audio,
                                         const Tensor& lip_mask, std::int64_t clip_len) {
    std::vector<ClipShift> shifts = latent_drift(frames, clip_len);
    const std::int64_t clips = static_cast<std::int64_t>(shifts.size());
    const std::int64_t c = frames.shape[1];
    const std::int64_t h = frames.shape[2];
    const std::int64_t w = frames.shape[3];
    if (audio.frames() != frames.shape[0]) {
        throw DimensionError("drift report: audio frames " + std::to_string(audio.frames()) +
                             " vs video frames " + std::to_string(frames.shape[0]));
    }

    auto frame_at = [&](std::int64_t i) {
        Tensor out = Tensor::zeros({c, h, w});
        const std::int64_t fn = c * h * w;
        std::copy(frames.data.begin() + i * fn, frames.data.begin() + (i + 1) * fn,
                  out.data.begin());
        return out;
    };
    auto clip_frames = [&](std::int64_t clip) {
        Tensor out = Tensor::zeros({clip_len, c, h, w});
        const std::int64_t fn = c * h * w;
        std::copy(frames.data.begin() + clip * clip_len * fn,
                  frames.data.begin() + (clip + 1) * clip_len * fn, out.data.begin());
        return out;
    };

    std::vector<DriftReportRow> rows(static_cast<std::size_t>(clips));
    for (std::int64_t i = 0; i < clips; ++i) {
        auto& row = rows[static_cast<std::size_t>(i)];
        row.clip = i;
        row.mean_shift = shifts[static_cast<std::size_t>(i)].mean_shift;
        row.std_shift = shifts[static_cast<std::size_t>(i)].std_shift;
        double de = 0.0;
        if (i > 0) {
            for (std::int64_t j = 0; j < clip_len; ++j) {
                de += frame_ciede(frame_at(i * clip_len + j), frame_at(j));
            }
            de /= static_cast<double>(clip_len);
        }
        row.ciede = de;
        RawAudioFeatures aslice;
        aslice.values = Tensor::zeros({clip_len, audio.dim()});
        std::copy(audio.values.data.begin() + i * clip_len * audio.dim(),
                  audio.values.data.begin() + (i + 1) * clip_len * audio.dim(),
                  aslice.values.data.begin());
        row.sync_r = sync_proxy(aslice, clip_frames(i), lip_mask);
    }
    return rows;
}

void write_drift_csv(const std::string& path, const std::vector<DriftReportRow>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("drift report: cannot open '" + path + "' for writing");
    out << "clip,mean_shift,std_shift,ciede,sync_r\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%.17g\n",
                      static_cast<long long>(r.clip), r.mean_shift, r.std_shift, r.ciede,
                      r.sync_r);
        out << buf;
    }
}

}  // namespace lff
