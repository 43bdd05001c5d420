#pragma once

#include "rpgcn/config.hpp"
#include "rpgcn/dataset.hpp"
#include "rpgcn/error.hpp"
#include "rpgcn/experiment.hpp"
#include "rpgcn/gcn.hpp"
#include "rpgcn/graph.hpp"
#include "rpgcn/linalg.hpp"
#include "rpgcn/plot.hpp"
#include "rpgcn/random.hpp"
#include "rpgcn/rptree.hpp"
#include "rpgcn/spectral.hpp"
