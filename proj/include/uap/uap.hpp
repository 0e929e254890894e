#pragma once

#include "uap/classifier.hpp"
#include "uap/dataset.hpp"
#include "uap/deepfool.hpp"
#include "uap/error.hpp"
#include "uap/evaluation.hpp"
#include "uap/label_graph.hpp"
#include "uap/rng.hpp"
#include "uap/tensor.hpp"
#include "uap/universal.hpp"
