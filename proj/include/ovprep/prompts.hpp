// Copyright 2026 The ovprep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Formatting prompt tables. Two id spaces exist: one for single-image data
// and one for OneVision (video ids 1-2, multi-image ids 3-26). Only the
// published variants are listed; variant choice is uniform.

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ovprep/error.hpp"

namespace ovprep {

enum class PromptPosition { kHead, kTail, kAll };

constexpr std::string_view position_name(PromptPosition p) {
  switch (p) {
    case PromptPosition::kHead: return "Head";
    case PromptPosition::kTail: return "Tail";
    case PromptPosition::kAll: return "All";
  }
  return "?";
}

struct FormattingPrompt {
  int id = 0;
  std::string kind;
  PromptPosition position = PromptPosition::kTail;
  std::vector<std::string> variants;
  /// Whether the prompt pins the answer to a fixed format (short answer,
  /// option letter, coordinates, transcription).
  bool fixed_answer = false;
};

class PromptTable {
 public:
  PromptTable(std::string name, std::vector<FormattingPrompt> prompts)
      : name_(std::move(name)), prompts_(std::move(prompts)) {
    for (const auto& p : prompts_) {
      if (p.variants.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "prompt " + std::to_string(p.id) + " has no variants");
      }
    }
  }

  const std::string& name() const { return name_; }
  const std::vector<FormattingPrompt>& prompts() const { return prompts_; }

  const FormattingPrompt* find(int id) const {
    auto it = std::find_if(prompts_.begin(), prompts_.end(), [id](const auto& p) { return p.id == id; });
    return it == prompts_.end() ? nullptr : &*it;
  }

  const FormattingPrompt& at(int id) const {
    if (const auto* p = find(id)) return *p;
    throw Error(ErrorCode::kDanglingPrompt, "prompt id " + std::to_string(id) + " not in table " + name_);
  }

 private:
  std::string name_;
  std::vector<FormattingPrompt> prompts_;
};

inline const PromptTable& single_image_prompts() {
  using P = PromptPosition;
  static const PromptTable table(
      "single-image",
      {
          {1, "VQA", P::kTail, {"Answer the question with a single word (or phrase)."}, true},
          {2, "VQA", P::kHead, {"Hint: Please answer the question and provide the final answer at the end."}, true},
          {3, "VQA (Yes/No)", P::kTail, {"Answer the question with Yes or No.", "Yes or No?"}, true},
          {4, "Choice", P::kTail, {"Answer with the given letter directly"}, true},
          {5,
           "Choice (Option Letter)",
           P::kTail,
           {"Answer with the option letter from the given choices directly.",
            "Please respond with only the letter of the correct answer."},
           true},
          {6,
           "Choice (Option Letter)",
           P::kHead,
           {"Hint: Please answer the question and provide the correct option letter, e.g., A, B, C, D, at the end."},
           true},
          {7, "Region Caption", P::kAll, {"Provide a short description for this region."}, true},
          {8, "Grounding", P::kAll, {"Provide the bounding box coordinate of the region this sentence describes."}, true},
          {9,
           "Brief Caption",
           P::kAll,
           {"Provide a one-sentence caption for the provided image.",
            "Create a compact narrative representing the image presented."},
           false},
          {10,
           "Screen Summarization",
           P::kAll,
           {"Summarize the main components in this picture.", "Provide a detailed account of this screenshot."},
           false},
          {11,
           "Detailed Caption",
           P::kAll,
           {"Describe this image in detail.", "Explain the visual content of the image in great detail."},
           false},
          {12,
           "Science Books",
           P::kAll,
           {"Here is a diagram figure extracted from some Grade 1 - 6 science books.\nPlease first describe the "
            "content of this figure in detail, including how the knowledge visually displayed in the diagram.\n"
            "Then start with a section title \"related knowledge:\", briefly and concisely highlight the related "
            "domain knowledge and theories that underly this diagram. Note that you do not need to provide much "
            "detail. Simply cover the most important concepts."},
           false},
          {13, "Information Extraction", P::kHead, {"Provide the requested information directly."}, true},
          {14,
           "Graph Summarization",
           P::kAll,
           {"Please clarify the meaning conveyed by this graph.", "Explain what this graph is communicating."},
           false},
          {15,
           "Photo Summarization",
           P::kAll,
           {"Highlight a few significant elements in this photo.",
            "Mention a couple of crucial points in this snapshot."},
           false},
          {16,
           "Chart Summarization",
           P::kAll,
           {"What insights can be drawn from this chart?", "Explain the trends shown in this chart."},
           false},
          {17,
           "OCR",
           P::kHead,
           {"OCR this image section by section, from top to bottom, and left to right. Do not insert line breaks "
            "in the output text. If a word is split due to a line break in the image, use a space instead"},
           true},
          {18,
           "Diagram Linkage",
           P::kAll,
           {"Dissect the diagram, highlighting the interaction between elements.",
            "Interpret the system depicted in the diagram, detailing component functions."},
           false},
          {19, "Code Generation", P::kAll, {"Compose the HTML code to achieve the same design as this screenshot."}, false},
          {20,
           "Choice (with Reasoning)",
           P::kHead,
           {"First perform reasoning, then finally select the question from the choices in the following format: "
            "Answer: xxx."},
           true},
          {21, "Math Computing", P::kTail, {"Round computations to 2 decimal places."}, true},
          {22, "LaTeX OCR", P::kAll, {"Please write out the expression of the formula in the image using LaTeX format."}, true},
          {23,
           "Text Reading",
           P::kAll,
           {"What is written in the image? Answer this question using the text in the image directly.",
            "Read and list the text in this image."},
           true},
          {24, "Choice (Full Option)", P::kTail, {"Please provide your answer by stating the letter followed by the full option."}, true},
      });
  return table;
}

inline const PromptTable& onevision_prompts() {
  using P = PromptPosition;
  static const std::vector<std::string> kStory = {
      "Given the stories paired with the first several images, can you finish the story based on the last image?",
      "With the narratives paired with the initial images, how would you conclude the story using the last picture?"};
  static const std::vector<std::string> kImageDiff = {"What's the difference between 2 images?",
                                                      "Identify the alterations between these two images."};
  static const PromptTable table(
      "onevision",
      {
          {1,
           "Choice (Option Letter)",
           P::kTail,
           {"Answer with the option letter from the given choices directly.",
            "Please respond with only the letter of the correct answer."},
           true},
          {2, "Choice (Full Option)", P::kTail, {"Please provide your answer by stating the letter followed by the full option."}, true},
          {3, "Open-Ended", P::kHead, {"What's the difference between 2 images?"}, false},
          {4, "Open-Ended", P::kHead, kStory, false},
          {5,
           "Multi-Choice",
           P::kHead,
           {"Here is a Raven’s Progressive Matrice in a three-by-three form. You are provided with the first eight "
            "elements in eight images, please select the last one from four choices following the structural and "
            "analogical relations."},
           true},
          {6,
           "Multi-Choice",
           P::kAll,
           {"There are ten possible explanations for the ten different answers to a VQA: ... I will give you two sets "
            "of pictures, questions, and answers to determine if they belong to the same 'Question-Answer "
            "Differences'. You must choose your answer from the Choice List."},
           true},
          {7, "Open-Ended", P::kHead, {"This is a 3D scenario."}, false},
          {8,
           "Open-Ended",
           P::kHead,
           {"I will give you several images and a question, your job is to seek information in the slide and answer "
            "the question correctly.",
            "Based on the images, please answer the following question."},
           false},
          {9,
           "Multi-Choice",
           P::kHead,
           {"Provided with a series of diagrams from a textbook, your responsibility is to correctly answer the "
            "following question. You must choose your answer from the Choice List.",
            "Using a selection of textbook diagrams, your task is to provide an accurate response to the subsequent "
            "query. You must choose your answer from the Choice List."},
           true},
          {10,
           "Open-Ended",
           P::kHead,
           {"Given six images taken from different cameras on a street view car, your task is to answer questions "
            "about the depicted scene. You must choose your answer from the Choice List.",
            "Upon receiving six photographs captured from various cameras on a street-view car, your responsibility "
            "is to provide accurate responses to questions about the scene. You must choose your answer from the "
            "Choice List."},
           false},
          {11,
           "Multi-Choice",
           P::kHead,
           {"I will provide you with two sets of pictures, each of which shows an object in the opposite state. Can "
            "you tell me if the states of these two sets of pictures are the same? You must choose your answer from "
            "the Choice List.",
            "I have two sets of pictures that show an object in opposite states. Can you tell me if the states of "
            "these two sets of pictures are the same? You must choose your answer from the Choice List."},
           true},
          {12,
           "Multi-Choice",
           P::kHead,
           {"Are the following four images of the same class?  You must choose your answer from the Choice List.",
            "Do the following four images belong to the same category?  You must choose your answer from the Choice "
            "List."},
           true},
          {13,
           "Multi-Choice",
           P::kHead,
           {"Are these two workpieces the same type?", "Are these two workpieces of the same kind?"},
           true},
          {14,
           "Multi-Choice",
           P::kHead,
           {"Presented with a textual recipe tutorial, your task is to scrutinize it carefully and select the image "
            "that is incoherent in the provided sequence of images. You must choose your answer from the Choice List.",
            "Given a text-based recipe guide, your responsibility is to meticulously review it and identify the image "
            "that doesn't fit in the following sequence of images. You must choose your answer from the Choice List."},
           true},
          {15,
           "Multi-Choice",
           P::kHead,
           {"I will give you a series of comic panels. The dialogue box of the last panel is masked. Can you choose "
            "the most relevant one from the candidates? You must choose your answer from the Choice List.",
            "Given previous full panels and one masked panel, your job is to select the most appropriate dialogue "
            "among four candidates. You must choose your answer from the Choice List."},
           true},
          {16,
           "Open-Ended",
           P::kHead,
           {"Give you a main goal, your job is to figure out what to do now by looking at current envirments. Your "
            "past views as well as decisions are also provided.",
            "Given a primary objective and your current surroundings, use your previous decisions and perspectives to "
            "determine your next move."},
           false},
          {17,
           "Multi-Choice",
           P::kHead,
           {"I will give you two pictures of the book cover. Please look at the pictures and answer a question You "
            "must choose your answer from the Choice List.",
            "I will provide you with two images of the book cover. Please examine the images and answer a question. "
            "You must choose your answer from the Choice List."},
           true},
          {18,
           "Multi-Choice",
           P::kHead,
           {"I will give you some pictures, and each group of pictures will correspond to a question. Please answer "
            "it briefly. You must choose your answer from the Choice List.",
            "For each group of pictures, there is a question. Please give a short answer to it. You must choose your "
            "answer from the Choice List."},
           true},
          {19,
           "Open-Ended",
           P::kHead,
           {"Please give a editing Request to describe the transformation from the source image to the target image.",
            "What is the correct image edit instruction that can transfrom the source image to target image?"},
           false},
          {20, "Open-Ended", P::kHead, kImageDiff, false},
          {21,
           "Open-Ended",
           P::kHead,
           {"What's the difference between 2 birds?", "Identify the alterations between these two birds."},
           false},
          {22, "Open-Ended", P::kHead, kImageDiff, false},
          {23, "Open-Ended", P::kHead, kStory, false},
          {24, "Open-Ended", P::kHead, kStory, false},
          {25, "Open-Ended", P::kHead, kStory, false},
          {26,
           "Multi-Choice",
           P::kAll,
           {"Answer the following multiple-choice question: Here is a statement describing 2 images: ... Is it true "
            "or false?"},
           true},
      });
  return table;
}

/// Resolves a manifest's prompt_table key; "none" yields nullopt.
inline std::optional<std::reference_wrapper<const PromptTable>> prompt_table_named(std::string_view name) {
  if (name == "single-image") return std::cref(single_image_prompts());
  if (name == "onevision") return std::cref(onevision_prompts());
  if (name == "none" || name.empty()) return std::nullopt;
  throw Error(ErrorCode::kSchema, "unknown prompt table \"" + std::string(name) + "\"");
}

}  // namespace ovprep
