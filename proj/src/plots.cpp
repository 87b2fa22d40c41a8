#include "unlearnkit/plots.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>

namespace unlearnkit {

namespace fs = std::filesystem;

namespace {

// ------------------------------------------------------------ PNG writing

void put_u32_be(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

void append_chunk(std::string& out, const char type[4], const std::string& payload) {
  put_u32_be(out, static_cast<uint32_t>(payload.size()));
  std::string body(type, 4);
  body += payload;
  out += body;
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(body.data()),
                         static_cast<uInt>(body.size()));
  put_u32_be(out, static_cast<uint32_t>(crc));
}

// rgb: height*width*3 bytes, row-major.
void write_png(const fs::path& path, const std::vector<unsigned char>& rgb, int width,
               int height) {
  std::string raw;
  raw.reserve(static_cast<size_t>(height) * (static_cast<size_t>(width) * 3 + 1));
  for (int y = 0; y < height; ++y) {
    raw.push_back('\0');  // filter type none
    raw.append(reinterpret_cast<const char*>(rgb.data() + static_cast<size_t>(y) * width * 3),
               static_cast<size_t>(width) * 3);
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::string compressed(bound, '\0');
  if (compress2(reinterpret_cast<Bytef*>(compressed.data()), &bound,
                reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                6) != Z_OK) {
    throw IoError("png: deflate failed");
  }
  compressed.resize(bound);

  std::string png("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  put_u32_be(ihdr, static_cast<uint32_t>(width));
  put_u32_be(ihdr, static_cast<uint32_t>(height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // color type: truecolor
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // interlace
  append_chunk(png, "IHDR", ihdr);
  append_chunk(png, "IDAT", compressed);
  append_chunk(png, "IEND", "");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(png.data(), static_cast<std::streamsize>(png.size()));
}

// ------------------------------------------------------------ raster helpers

struct Canvas {
  int width, height;
  std::vector<unsigned char> rgb;
  Canvas(int w, int h) : width(w), height(h), rgb(static_cast<size_t>(w) * h * 3, 255) {}
  void set(int x, int y, unsigned char r, unsigned char g, unsigned char b) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    auto* p = &rgb[(static_cast<size_t>(y) * width + x) * 3];
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }
  void fill_rect(int x0, int y0, int x1, int y1, unsigned char r, unsigned char g,
                 unsigned char b) {
    for (int y = std::max(0, y0); y < std::min(height, y1); ++y) {
      for (int x = std::max(0, x0); x < std::min(width, x1); ++x) set(x, y, r, g, b);
    }
  }
};

// 5x7 glyphs for the digits, '.', '-' and '%': enough to annotate axes.
const unsigned char* glyph_for(char c) {
  static const unsigned char digits[13][7] = {
      {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e},  // 0
      {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e},  // 1
      {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f},  // 2
      {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e},  // 3
      {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02},  // 4
      {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e},  // 5
      {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e},  // 6
      {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
      {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e},  // 8
      {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c},  // 9
      {0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c},  // .
      {0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00},  // -
      {0x19, 0x19, 0x02, 0x04, 0x08, 0x13, 0x13},  // %
  };
  if (c >= '0' && c <= '9') return digits[c - '0'];
  if (c == '.') return digits[10];
  if (c == '-') return digits[11];
  if (c == '%') return digits[12];
  return nullptr;
}

void draw_text(Canvas& canvas, int x, int y, const std::string& text) {
  for (char c : text) {
    if (const auto* glyph = glyph_for(c)) {
      for (int row = 0; row < 7; ++row) {
        for (int col = 0; col < 5; ++col) {
          if (glyph[row] & (1 << (4 - col))) canvas.set(x + col, y + row, 30, 30, 30);
        }
      }
    }
    x += 6;
  }
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), v >= 100.0 ? "%.0f" : "%.2f", v);
  return buf;
}

const unsigned char kSeriesColors[][3] = {
    {66, 133, 244}, {219, 68, 55}, {244, 180, 0}, {15, 157, 88}, {171, 71, 188}, {0, 172, 193}};

}  // namespace

void render_bar_chart_png(const BarChartData& data, const fs::path& png_path) {
  const int groups = static_cast<int>(data.group_labels.size());
  const int series = static_cast<int>(data.series_labels.size());
  if (groups == 0 || series == 0) throw ArgumentError("bar chart: empty data");

  double cap = data.value_cap;
  if (cap <= 0.0) {
    for (const auto& row : data.values) {
      for (double v : row) cap = std::max(cap, v);
    }
    cap = cap <= 0.0 ? 1.0 : cap * 1.1;
  }

  const int margin_l = 48, margin_r = 16, margin_t = 20, margin_b = 28;
  const int bar_w = 18, bar_gap = 4, group_gap = 26;
  const int plot_h = 220;
  const int group_w = series * (bar_w + bar_gap) + group_gap;
  Canvas canvas(margin_l + groups * group_w + margin_r, margin_t + plot_h + margin_b);

  // axes
  canvas.fill_rect(margin_l - 1, margin_t, margin_l, margin_t + plot_h + 1, 0, 0, 0);
  canvas.fill_rect(margin_l - 1, margin_t + plot_h, canvas.width - margin_r,
                   margin_t + plot_h + 1, 0, 0, 0);
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = cap * tick / 4.0;
    const int y = margin_t + plot_h - static_cast<int>(std::lround(plot_h * tick / 4.0));
    canvas.fill_rect(margin_l - 4, y, margin_l - 1, y + 1, 0, 0, 0);
    draw_text(canvas, 4, y - 3, format_value(v));
  }

  for (int g = 0; g < groups; ++g) {
    int x = margin_l + g * group_w + group_gap / 2;
    for (int s = 0; s < series; ++s) {
      const double v = data.values[static_cast<size_t>(s)][static_cast<size_t>(g)];
      const int h = static_cast<int>(std::lround(plot_h * std::clamp(v / cap, 0.0, 1.0)));
      const auto& c = kSeriesColors[s % 6];
      canvas.fill_rect(x, margin_t + plot_h - h, x + bar_w, margin_t + plot_h, c[0], c[1], c[2]);
      draw_text(canvas, x, margin_t + plot_h - h - 10, format_value(v));
      x += bar_w + bar_gap;
    }
    draw_text(canvas, margin_l + g * group_w + group_gap / 2,
              margin_t + plot_h + 6, std::to_string(g));
  }
  // legend swatches, one per series; names live in the sidecar CSV
  int lx = margin_l;
  for (int s = 0; s < series; ++s) {
    const auto& c = kSeriesColors[s % 6];
    canvas.fill_rect(lx, 4, lx + 10, 14, c[0], c[1], c[2]);
    draw_text(canvas, lx + 13, 7, std::to_string(s));
    lx += 40;
  }

  write_png(png_path, canvas.rgb, canvas.width, canvas.height);
}

void write_chart_sidecar_csv(const BarChartData& data, const fs::path& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw IoError("cannot write " + csv_path.string());
  out << "# " << data.title << "\n";
  out << "series";
  for (const auto& g : data.group_labels) out << "," << g;
  out << "\n";
  for (size_t s = 0; s < data.series_labels.size(); ++s) {
    out << data.series_labels[s];
    for (double v : data.values[s]) out << "," << v;
    out << "\n";
  }
}

std::vector<fs::path> emit_plots(const std::vector<MetricsReport>& reports,
                                 const fs::path& out_dir) {
  if (reports.empty()) throw ArgumentError("emit_plots: no reports");
  fs::create_directories(out_dir);
  std::vector<fs::path> written;

  // Accuracy chart: forget/retain per report, series = model role.
  {
    BarChartData chart;
    chart.title = "accuracy (percent): groups are <experiment>:forget then <experiment>:retain";
    chart.series_labels = {"original", "gold", "unlearned", "amnesiac"};
    chart.values.assign(4, {});
    bool any = false;
    for (const auto& r : reports) {
      if (!r.acc_forget_original || !r.acc_retain_original) continue;
      any = true;
      chart.group_labels.push_back(r.experiment_id + ":forget");
      chart.group_labels.push_back(r.experiment_id + ":retain");
      auto push = [&](size_t s, const std::optional<double>& f, const std::optional<double>& ret) {
        chart.values[s].push_back(f.value_or(0.0));
        chart.values[s].push_back(ret.value_or(0.0));
      };
      push(0, r.acc_forget_original, r.acc_retain_original);
      push(1, r.acc_forget_gold, r.acc_retain_gold);
      push(2, r.acc_forget_unlearned, r.acc_retain_unlearned);
      push(3, r.acc_forget_amnesiac, r.acc_retain_amnesiac);
    }
    if (any) {
      chart.value_cap = 100.0;
      render_bar_chart_png(chart, out_dir / "accuracy_bars.png");
      write_chart_sidecar_csv(chart, out_dir / "accuracy_bars.csv");
      written.push_back(out_dir / "accuracy_bars.png");
    } else {
      std::cerr << "emit_plots: no accuracy fields present, skipping accuracy chart\n";
    }
  }

  // Timing chart across methods.
  {
    BarChartData chart;
    chart.title = "wall clock seconds";
    chart.series_labels = {"retrain", "unlearn", "amnesiac"};
    chart.values.assign(3, {});
    bool any = false;
    for (const auto& r : reports) {
      if (!r.seconds_gold || !r.seconds_unlearn) continue;
      any = true;
      chart.group_labels.push_back(r.experiment_id);
      chart.values[0].push_back(r.seconds_gold.value_or(0.0));
      chart.values[1].push_back(r.seconds_unlearn.value_or(0.0));
      chart.values[2].push_back(r.seconds_amnesiac.value_or(0.0));
    }
    if (any) {
      render_bar_chart_png(chart, out_dir / "timing_bars.png");
      write_chart_sidecar_csv(chart, out_dir / "timing_bars.csv");
      written.push_back(out_dir / "timing_bars.png");
    } else {
      std::cerr << "emit_plots: no wall-clock fields present, skipping timing chart\n";
    }
  }
  return written;
}

}  // namespace unlearnkit
