#pragma once

#include "weclust/cdmatrix.hpp"
#include "weclust/cluster_core.hpp"
#include "weclust/config.hpp"
#include "weclust/corpus.hpp"
#include "weclust/embed_store.hpp"
#include "weclust/error.hpp"
#include "weclust/eval.hpp"
#include "weclust/hier.hpp"
#include "weclust/pipeline.hpp"
#include "weclust/stoplist.hpp"
