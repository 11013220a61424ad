#include "pada/mask_metrics.hpp"

#include "json.hpp"
#include "pada/error.hpp"
#include "text.hpp"

namespace pada {

MaskAgreement& MaskAgreement::operator+=(const MaskAgreement& o) noexcept {
  both_retained += o.both_retained;
  both_zeroed += o.both_zeroed;
  union_retained += o.union_retained;
  total += o.total;
  return *this;
}

double MaskAgreement::iou() const noexcept {
  if (union_retained == 0) return 1.0;
  return static_cast<double>(both_retained) / static_cast<double>(union_retained);
}

double MaskAgreement::mma() const {
  if (total == 0) throw Error(ErrorKind::empty, "MMA over zero weights");
  return static_cast<double>(both_retained + both_zeroed) / static_cast<double>(total);
}

MaskAgreement agreement(const MaskTensor& a, const MaskTensor& b) {
  if (a.bits.size() != b.bits.size()) {
    throw Error(ErrorKind::structural, "mask tensors '" + a.name + "' and '" + b.name +
                                           "' differ in size");
  }
  MaskAgreement c;
  c.total = a.bits.size();
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    const bool x = a.bits[i] != 0;
    const bool y = b.bits[i] != 0;
    c.both_retained += x && y;
    c.both_zeroed += !x && !y;
    c.union_retained += x || y;
  }
  return c;
}

MaskAgreement agreement(const Mask& a, const Mask& b) {
  check_aligned(a, b);
  MaskAgreement c;
  for (std::size_t i = 0; i < a.tensors.size(); ++i) c += agreement(a.tensors[i], b.tensors[i]);
  return c;
}

double iou(const Mask& a, const Mask& b) { return agreement(a, b).iou(); }
double mma(const Mask& a, const Mask& b) { return agreement(a, b).mma(); }

SimilarityReport layerwise_report(const Mask& a, const Mask& b) {
  check_aligned(a, b);
  SimilarityReport r;
  r.source_a = a.source;
  r.source_b = b.source;
  r.rate_a = a.rate;
  r.rate_b = b.rate;
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    const auto c = agreement(a.tensors[i], b.tensors[i]);
    r.layers.push_back({a.tensors[i].name, c.iou(), c.mma(), c});
    r.counts += c;
  }
  r.iou = r.counts.iou();
  r.mma = r.counts.mma();
  return r;
}

namespace {

void csv_row(std::string& out, const std::string& layer, const std::string& name, double iou_v,
             double mma_v, const MaskAgreement& c) {
  out += layer + ',' + name + ',' + detail::format_number(iou_v) + ',' +
         detail::format_number(mma_v) + ',' + std::to_string(c.both_retained) + ',' +
         std::to_string(c.both_zeroed) + ',' + std::to_string(c.union_retained) + ',' +
         std::to_string(c.total) + '\n';
}

nlohmann::json counts_json(const MaskAgreement& c) {
  return {{"agg1", c.both_retained},
          {"agg0", c.both_zeroed},
          {"union", c.union_retained},
          {"total", c.total},
          {"empty_union", c.empty_union()}};
}

}  // namespace

std::string report_to_csv(const SimilarityReport& report) {
  std::string out = "layer,name,iou,mma,agg1,agg0,union,total\n";
  for (std::size_t i = 0; i < report.layers.size(); ++i) {
    const auto& l = report.layers[i];
    csv_row(out, std::to_string(i), l.name, l.iou, l.mma, l.counts);
  }
  csv_row(out, "global", "", report.iou, report.mma, report.counts);
  return out;
}

std::string report_to_json(const SimilarityReport& report) {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t i = 0; i < report.layers.size(); ++i) {
    const auto& l = report.layers[i];
    layers.push_back({{"layer", i},
                      {"name", l.name},
                      {"iou", l.iou},
                      {"mma", l.mma},
                      {"counts", counts_json(l.counts)}});
  }
  nlohmann::json j{
      {"global", {{"iou", report.iou}, {"mma", report.mma}, {"counts", counts_json(report.counts)}}},
      {"layers", layers},
      {"mask_a", {{"source", std::string(to_string(report.source_a))}, {"rate", report.rate_a}}},
      {"mask_b", {{"source", std::string(to_string(report.source_b))}, {"rate", report.rate_b}}},
  };
  return j.dump(2) + "\n";
}

}  // namespace pada
