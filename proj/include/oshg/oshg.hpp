#pragma once

#include "oshg/error.hpp"
#include "oshg/rng.hpp"
#include "oshg/log.hpp"
#include "oshg/matrix.hpp"
#include "oshg/dataio.hpp"
#include "oshg/hypergraph.hpp"
#include "oshg/hgconv.hpp"
#include "oshg/adapter.hpp"
#include "oshg/infotheory.hpp"
#include "oshg/retrieval.hpp"
#include "oshg/ablation.hpp"
#include "oshg/training.hpp"
#include "oshg/synthetic.hpp"
