// Copyright 2026 The refuge-eval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "refuge/errors.hpp"

namespace refuge {

/// Per-pixel class of a submission mask. The grayscale file encoding is
/// Cup = 0, Disc = 128, Background = 255.
enum class PixelLabel : std::uint8_t { Cup = 0, Disc = 1, Background = 2 };

constexpr std::uint8_t kCupGray = 0;
constexpr std::uint8_t kDiscGray = 128;
constexpr std::uint8_t kBackgroundGray = 255;

inline std::uint8_t gray_of(PixelLabel l) {
    switch (l) {
        case PixelLabel::Cup: return kCupGray;
        case PixelLabel::Disc: return kDiscGray;
        default: return kBackgroundGray;
    }
}

/// Tri-level label image, row-major with the top row first. Immutable by
/// convention once filled in; all operations on it are pure.
struct LabelMask {
    int width = 0;
    int height = 0;
    std::vector<PixelLabel> labels;

    LabelMask() = default;
    LabelMask(int w, int h, PixelLabel fill = PixelLabel::Background)
        : width(w), height(h),
          labels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

    std::size_t size() const { return labels.size(); }

    PixelLabel at(int x, int y) const {
        return labels[static_cast<std::size_t>(y) * width + x];
    }
    void set(int x, int y, PixelLabel l) {
        labels[static_cast<std::size_t>(y) * width + x] = l;
    }

    bool same_shape(const LabelMask& o) const {
        return width == o.width && height == o.height;
    }
    bool operator==(const LabelMask& o) const = default;
};

/// Binary region with the same geometry conventions as LabelMask.
struct RegionMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> member;

    RegionMask() = default;
    RegionMask(int w, int h)
        : width(w), height(h),
          member(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0) {}

    bool at(int x, int y) const {
        return member[static_cast<std::size_t>(y) * width + x] != 0;
    }
    void set(int x, int y, bool v) {
        member[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (std::uint8_t m : member) n += m;
        return n;
    }
    bool same_shape(const RegionMask& o) const {
        return width == o.width && height == o.height;
    }
    bool operator==(const RegionMask& o) const = default;
};

enum class RegionKind { OpticDisc, OpticCup };

/// The disc annotation is a full ellipse that physically contains the cup, so
/// cup pixels count as disc pixels when deriving the OD region. The
/// DiscLabelOnly rule (OD = label-128 pixels alone) exists for comparison runs
/// against evaluators that read the raw label instead.
enum class DiscRegionRule { CupAndDiscLabels, DiscLabelOnly };

inline RegionMask region_of(const LabelMask& mask, RegionKind kind,
                            DiscRegionRule rule = DiscRegionRule::CupAndDiscLabels) {
    RegionMask r(mask.width, mask.height);
    const std::size_t n = mask.size();
    if (kind == RegionKind::OpticCup) {
        for (std::size_t i = 0; i < n; ++i)
            r.member[i] = mask.labels[i] == PixelLabel::Cup ? 1 : 0;
    } else if (rule == DiscRegionRule::CupAndDiscLabels) {
        for (std::size_t i = 0; i < n; ++i)
            r.member[i] = mask.labels[i] != PixelLabel::Background ? 1 : 0;
    } else {
        for (std::size_t i = 0; i < n; ++i)
            r.member[i] = mask.labels[i] == PixelLabel::Disc ? 1 : 0;
    }
    return r;
}

}  // namespace refuge
