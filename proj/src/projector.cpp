#include "wce/projector.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "text_format.hpp"
#include "wce/error.hpp"
#include "wce/weighting.hpp"
#include "wce/word_class.hpp"

namespace wce {

ProjectorSelection select_round_robin(const Matrix& scores, std::size_t budget) {
  const std::size_t v = scores.rows();
  const std::size_t m = scores.cols();
  if (m == 0) fail(ErrorKind::Config, "projector selection needs at least one class");
  if (budget < m) {
    fail(ErrorKind::Config, "projector budget " + std::to_string(budget) +
                                " is smaller than the number of classes (" + std::to_string(m) + ")");
  }
  std::vector<std::vector<std::size_t>> ranking(m);
  for (std::size_t c = 0; c < m; ++c) {
    auto& order = ranking[c];
    order.resize(v);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores(a, c) > scores(b, c); });
  }
  std::vector<std::size_t> cursor(m, 0);
  std::vector<bool> taken(v, false);
  ProjectorSelection sel;
  const std::size_t target = std::min(budget, v);
  while (sel.rows.size() < target) {
    for (std::size_t c = 0; c < m && sel.rows.size() < target; ++c) {
      auto& pos = cursor[c];
      while (pos < v && taken[ranking[c][pos]]) ++pos;
      if (pos == v) continue;
      const std::size_t row = ranking[c][pos++];
      taken[row] = true;
      sel.rows.push_back(row);
      sel.classes.push_back(c);
    }
  }
  return sel;
}

Matrix information_gain(const LabeledCorpus& corpus) {
  const auto& train = corpus.encoded(Split::Train);
  return correlate_ig(binarize(train.counts), train.labels);
}

ProjectorSelection export_projector(const EmbeddingMatrix& e, const Matrix& scores,
                                    const std::vector<std::string>& class_names,
                                    const std::filesystem::path& out_dir,
                                    const ProjectorOptions& options) {
  if (scores.rows() > e.rows()) {
    fail(ErrorKind::Dimension, "score matrix has more terms than the embedding");
  }
  if (scores.cols() != class_names.size()) {
    fail(ErrorKind::Dimension, "score matrix columns do not match the class names");
  }
  const ProjectorSelection sel = select_round_robin(scores, options.budget);

  std::size_t first = 0;
  std::size_t count = e.dims();
  if (options.columns == EmbeddingMatrix::Columns::Leading) count = e.q;
  if (options.columns == EmbeddingMatrix::Columns::Trailing) {
    first = e.q;
    count = e.r;
  }
  if (count == 0) fail(ErrorKind::Config, "the requested embedding span is empty");

  std::filesystem::create_directories(out_dir);
  std::ofstream vectors(out_dir / "vectors.tsv", std::ios::binary);
  std::ofstream meta(out_dir / "metadata.tsv", std::ios::binary);
  if (!vectors || !meta) fail(ErrorKind::Io, "cannot write projector files in " + out_dir.string());
  meta << "term\tselected_class\ttop_wce_class\n";
  const bool has_wce_span = e.trailing_kind == SpanKind::Supervised && e.r > 0;
  for (std::size_t k = 0; k < sel.rows.size(); ++k) {
    const std::size_t row = sel.rows[k];
    const auto values = e.values.row(row);
    for (std::size_t j = 0; j < count; ++j) {
      if (j) vectors << '\t';
      vectors << text::format_g6(values[first + j]);
    }
    vectors << '\n';
    std::string top = "-";
    if (has_wce_span && e.has_wce[row]) {
      const auto span = values.subspan(e.q, e.r);
      const auto best = static_cast<std::size_t>(std::max_element(span.begin(), span.end()) - span.begin());
      top = best < e.trailing_names.size() ? e.trailing_names[best] : "dim" + std::to_string(best + 1);
    }
    meta << e.terms[row] << '\t' << class_names[sel.classes[k]] << '\t' << top << '\n';
  }
  if (!vectors || !meta) fail(ErrorKind::Io, "failed writing projector files in " + out_dir.string());
  return sel;
}

}  // namespace wce
