#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "wce/corpus.hpp"
#include "wce/embeddings.hpp"
#include "wce/matrix.hpp"

namespace wce {

struct ProjectorSelection {
  std::vector<std::size_t> rows;     // selected term rows, in selection order
  std::vector<std::size_t> classes;  // class that selected each row
};

/// Round robin over classes: each class in turn takes its highest-scoring
/// term (ties by row) not already taken, until budget terms are selected or
/// none remain. scores is terms x classes.
ProjectorSelection select_round_robin(const Matrix& scores, std::size_t budget);

/// Information gain of every training-vocabulary term for every class,
/// computed on the binarized training split.
Matrix information_gain(const LabeledCorpus& corpus);

struct ProjectorOptions {
  std::size_t budget = 5000;
  EmbeddingMatrix::Columns columns = EmbeddingMatrix::Columns::All;
};

/// Writes vectors.tsv (one embedding row per selected term) and
/// metadata.tsv (term, selected class, class with the largest WCE value).
ProjectorSelection export_projector(const EmbeddingMatrix& e, const Matrix& scores,
                                    const std::vector<std::string>& class_names,
                                    const std::filesystem::path& out_dir,
                                    const ProjectorOptions& options = {});

}  // namespace wce
