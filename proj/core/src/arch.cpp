// Copyright 2026 The LesionSeg Authors
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

#include "lesionseg/arch.hpp"

#include <algorithm>
#include <sstream>

#include "lesionseg/errors.hpp"

namespace lesionseg {

namespace {

LayerSpec row(std::string name, std::size_t kernel, std::size_t out, std::size_t stride,
              std::size_t rate, Padding pad, Activation act, bool bn = true) {
  return {std::move(name), kernel, out, stride, rate, pad, act, bn};
}

const char* padding_name(Padding p) { return p == Padding::Mirror ? "mirror" : "zero"; }
const char* activation_name(Activation a) { return a == Activation::Relu ? "relu" : "none"; }

}  // namespace

ArchSpec ArchSpec::lesionseg(std::size_t input_h, std::size_t input_w) {
  constexpr auto M = Padding::Mirror;
  constexpr auto Z = Padding::Zero;
  constexpr auto R = Activation::Relu;
  constexpr auto N = Activation::None;
  ArchSpec spec;
  spec.input_h = input_h;
  spec.input_w = input_w;
  spec.layers = {
      row("conv1_1", 5, 64, 2, 1, M, R),  row("conv1_2", 3, 96, 1, 1, M, R),
      row("conv1_3", 1, 96, 1, 1, Z, R),  row("conv2_1", 3, 128, 2, 1, M, R),
      row("conv2_2", 3, 256, 1, 1, M, R), row("conv2_3", 1, 256, 1, 1, Z, R),
      row("conv3_1", 3, 256, 1, 2, M, R), row("conv3_2", 3, 256, 1, 2, M, R),
      row("conv3_3", 3, 128, 1, 2, M, N), row("subpixel", 3, 32, 1, 1, M, N, false),
  };
  return spec;
}

ArchSpec ArchSpec::lesionseg_narrow(std::size_t input_h, std::size_t input_w,
                                    std::size_t divisor) {
  if (divisor == 0) throw SpecError("width divisor must be >= 1");
  ArchSpec spec = lesionseg(input_h, input_w);
  for (std::size_t i = 0; i + 1 < spec.layers.size(); ++i) {
    auto& l = spec.layers[i];
    l.out_channels = std::max<std::size_t>(1, l.out_channels / divisor);
  }
  return spec;
}

std::size_t ArchSpec::stride_product() const {
  std::size_t p = 1;
  for (const auto& l : layers) p *= l.stride;
  return p;
}

void ArchSpec::validate() const {
  if (layers.empty()) throw SpecError("architecture has no layers");
  if (in_channels == 0 || num_classes < 2 || upsample == 0) {
    throw SpecError("in_channels, upsample must be >= 1 and num_classes >= 2");
  }
  for (const auto& l : layers) {
    if (l.kernel % 2 == 0) throw SpecError("layer " + l.name + ": kernel must be odd");
    if (l.stride == 0 || l.dilation == 0 || l.out_channels == 0) {
      throw SpecError("layer " + l.name + ": stride, rate and width must be >= 1");
    }
    if (l.name.empty() || l.name.find_first_of(" \t\n") != std::string::npos) {
      throw SpecError("layer names must be non-empty and contain no whitespace");
    }
  }
  if (stride_product() != upsample) {
    throw SpecError("product of layer strides (" + std::to_string(stride_product()) +
                    ") must equal the upsample factor (" + std::to_string(upsample) + ")");
  }
  if (input_h == 0 || input_w == 0 || input_h % upsample != 0 || input_w % upsample != 0) {
    throw SpecError("input size " + std::to_string(input_h) + "x" + std::to_string(input_w) +
                    " must be divisible by " + std::to_string(upsample));
  }
  if (layers.back().out_channels != upsample * upsample * num_classes) {
    throw SpecError("subpixel layer must have upsample^2 * num_classes = " +
                    std::to_string(upsample * upsample * num_classes) + " filters");
  }
  // Every intermediate map must be large enough for its mirror margin.
  std::size_t h = input_h;
  std::size_t w = input_w;
  for (const auto& l : layers) {
    const std::size_t margin = l.dilation * (l.kernel - 1) / 2;
    if (l.padding == Padding::Mirror && margin > 0 && (margin >= h || margin >= w)) {
      throw SpecError("layer " + l.name + ": feature map " + std::to_string(h) + "x" +
                      std::to_string(w) + " too small for mirror margin " + std::to_string(margin));
    }
    h = (h + l.stride - 1) / l.stride;
    w = (w + l.stride - 1) / l.stride;
  }
}

std::string ArchSpec::serialize() const {
  std::ostringstream out;
  out << "input " << input_h << ' ' << input_w << ' ' << in_channels << '\n';
  out << "upsample " << upsample << '\n';
  out << "classes " << num_classes << '\n';
  for (const auto& l : layers) {
    out << "layer " << l.name << " k=" << l.kernel << " out=" << l.out_channels
        << " stride=" << l.stride << " rate=" << l.dilation << " pad=" << padding_name(l.padding)
        << " act=" << activation_name(l.activation) << " bn=" << (l.batch_norm ? 1 : 0) << '\n';
  }
  return out.str();
}

ArchSpec ArchSpec::parse(std::string_view text) {
  ArchSpec spec;
  spec.layers.clear();
  std::istringstream in{std::string(text)};
  std::string line;
  auto fail = [](const std::string& what) -> SpecError {
    return SpecError("malformed architecture text: " + what);
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "input") {
      if (!(ls >> spec.input_h >> spec.input_w >> spec.in_channels)) throw fail(line);
    } else if (key == "upsample") {
      if (!(ls >> spec.upsample)) throw fail(line);
    } else if (key == "classes") {
      if (!(ls >> spec.num_classes)) throw fail(line);
    } else if (key == "layer") {
      LayerSpec l;
      if (!(ls >> l.name)) throw fail(line);
      std::string field;
      int seen = 0;
      while (ls >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) throw fail(line);
        const std::string k = field.substr(0, eq);
        const std::string v = field.substr(eq + 1);
        try {
          if (k == "k") l.kernel = std::stoul(v);
          else if (k == "out") l.out_channels = std::stoul(v);
          else if (k == "stride") l.stride = std::stoul(v);
          else if (k == "rate") l.dilation = std::stoul(v);
          else if (k == "pad" && (v == "mirror" || v == "zero"))
            l.padding = v == "mirror" ? Padding::Mirror : Padding::Zero;
          else if (k == "act" && (v == "relu" || v == "none"))
            l.activation = v == "relu" ? Activation::Relu : Activation::None;
          else if (k == "bn" && (v == "0" || v == "1")) l.batch_norm = v == "1";
          else throw fail(line);
        } catch (const std::logic_error&) {
          throw fail(line);
        }
        ++seen;
      }
      if (seen != 7) throw fail(line);
      spec.layers.push_back(std::move(l));
    } else {
      throw fail(line);
    }
  }
  spec.validate();
  return spec;
}

std::uint64_t ArchSpec::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace lesionseg
