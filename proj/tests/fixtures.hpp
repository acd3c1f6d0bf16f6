#pragma once

// Twelve reference question-answering cases: question, gold answers, the
// model's answer and its correctness, the sampled responses, and the singular
// values of the response embedding matrix with their expected effective rank.

#include <string>
#include <vector>

namespace eruq::fixtures {

struct CaseStudy {
  std::string name;
  std::string question;
  std::vector<std::string> references;
  std::string answer;
  bool correct;
  std::vector<std::string> responses;
  std::vector<double> singular_values;
  double effective_rank;
};

inline const std::vector<CaseStudy>& case_studies() {
  static const std::vector<CaseStudy> cases{
      {"gagarin",
       "Who was the first man sent into space, in 1961?",
       {"gagarin"},
       "yuri gagarin",
       true,
       std::vector<std::string>(9, "yuri gagarin"),
       {76.35235595703125, 2.6761877219491637e-14, 1.1108339471383637e-15, 2.146262724714404e-30,
        3.9155441760212304e-31, 0.0, 0.0, 0.0, 0.0, 0.0},
       1.0000000000000002},
      {"french",
       "September 9, 1969 saw what made an official language of Canada?",
       {"french"},
       "french",
       true,
       {"Quebec", "french", "french", "Quebec", "constitution", "Quebec", "french", "french", "french"},
       {60.25969314575195, 41.63536071777344, 24.346080780029297, 1.6957731741170864e-14,
        5.443248018391789e-15, 1.198083634661477e-15, 8.686304874642721e-16, 1.4343240353264575e-16,
        8.151879937535818e-32, 2.8225723498131095e-32},
       2.818618681563689},
      {"sphenoid",
       "In which part of the human body would you find the Sphenoid bone?",
       {"skull"},
       "brain",
       false,
       {"head", "brain", "skull", "skull", "skull", "head", "brain", "skull", "skull"},
       {58.72682571411133, 34.81084442138672, 29.228200912475586, 7.700909307212667e-15,
        7.15308397231237e-15, 2.269143032179147e-15, 3.835939579384829e-16, 3.338613852606579e-30,
        1.4536969531393071e-31, 7.850294372204882e-33},
       2.8627889069115606},
      {"frick",
       "Who did Frick remove from the police force?",
       {"anyone he suspected of being a republican"},
       "the corrupt",
       false,
       std::vector<std::string>(9, "the corrupt"),
       {1139.242431640625, 3.5298562575496184e-13, 1.458547028271827e-14, 3.75700543160097e-29,
        3.410722249588845e-30, 2.802596928649634e-45, 1.401298464324817e-45, 0.0, 0.0, 0.0},
       1.0000000000000004},
      {"steve-stone",
       "Who verbally attacked Steve Stone?",
       {"Kent Mercker"},
       "Steve Stone",
       false,
       {"Joe Morgan", "his boss", "John Kruk", "Steve Stone", "Steve Stone", "his boss", "John Madden",
        "his boss", "his boss"},
       {1180.1435546875, 552.9315185546875, 154.78468322753906, 16.52665138244629, 6.953697204589844,
        1.193859735463404e-13, 1.553780128377754e-14, 6.809435505831249e-16, 1.553959034971104e-17,
        1.1361135973578757e-30},
       2.513272471125542},
      {"overseas-territories",
       "In 2002 what act granted full British citizenship to the citizens of the islands?",
       {"British Overseas Territories Act 2002"},
       "British Overseas Territories Act",
       true,
       {"British Overseas Territories Act", "British Overseas Territories Act",
        "British Overseas Territories Act", "British Overseas Territories Act",
        "British Overseas Territories Act", "British Nationality Act", "British Overseas Territories Act",
        "British Overseas Territories Act", "British Overseas Territories Act"},
       {1153.8829345703125, 328.6450500488281, 7.30688702902868e-14, 2.118430780068855e-30,
        1.2843073833195104e-33, 0.0, 0.0, 0.0, 0.0, 0.0},
       1.6972759552279857},
      {"thyroid",
       "Which are the thyroid hormone analogs utilized in human studies?",
       {"TRIAC"},
       "Liothyronine (T3) and levothyroxine (T4)",
       false,
       {"triiodothyronine (T3) and levothyroxine (T4)", "Liothyronine (T3) and levothyroxine (T4)",
        "Liothyronine (T3) and levothyroxine (T4)", "Liothyronine (T3) and levothyroxine (T4)",
        "Liothyronine (T3) and levothyroxine (T4)", "Liothyronine (T3) and levothyroxine (T4)",
        "liothyronine and levothyroxine", "Liothyronine (T3) and levothyroxine (T4)",
        "liothyronine and levothyroxine"},
       {218.68751525878906, 62.00069046020508, 15.469388961791992, 3.4699248902941024e-15,
        3.3113897569630145e-15, 4.50245604514668e-31, 1.978491468987644e-31, 2.0052295279776766e-32, 0.0,
        0.0},
       2.0248367530554368},
      {"warfarin",
       "Which genes are involved in patient response to warfarin?",
       {"CYP2C9", "VKORC1", "ORM1", "CYP4F2", "EPHX1", "CYP2C18", "CYP2C19", "CYP3A5", "protein S",
        "clotting factor V", "PROC", "GGCX"},
       "VKORC1 and CYP2C9",
       true,
       {"VKORC1 and CYP2C9", "VKORC1 and CYP2C9", "CYP2C9 and VKORC1", "VKORC1 and CYP2C9",
        "CYP2C9, VKORC1, and CYP3A4", "CYP2C9, VKORC1, and CYP3A4", "VKORC1 and CYP2C9",
        "VKORC1 and CYP2C9", "CYP2C9 and VKORC1"},
       {217.03753662109375, 100.93067932128906, 6.290593147277832, 4.6974177206424855e-15,
        2.6008424048733518e-15, 1.8994920306458578e-16, 1.1646331124343226e-16, 8.127036452178364e-32,
        1.1876486869033015e-33, 0.0},
       2.0309090152250144},
      {"ifap",
       "List symptoms of the IFAP syndrome.",
       {"follicular ichthyosis", "atrichia", "photophobia"},
       "intellectual disability, fibrosis, alopecia, and pigmentary changes.",
       false,
       {"ichthyosis, facial dysmorphism, arthrogryposis, and pul",
        "intellectual disability, fibrosis, alopecia, and pigmentary changes",
        "Intellectual disability, FGFR3 mutation, cardiac defects, and pul",
        "intellectual disability, fibrosis, ataxia, and pulmonary disease",
        "ichthyosis, ataxia, pulmonary dysfunction, and immunodefic",
        "intellectual disability, fibrosis, ataxia, and seizures",
        "intellectual disability, fibrosis, alopecia, and pigmentation abnormalities",
        "ichthyosis, facial dysmorphism, arthrogryposis, and pul",
        "intellectual disability, fragile bones, anxiety, and pulmonary issues"},
       {122.30469512939453, 114.34846496582031, 82.5096206665039, 71.02500915527344, 61.05084991455078,
        55.45585250854492, 55.206974029541016, 45.03531265258789, 5.794018268585205,
        1.2034170623171584e-14},
       7.804594598381604},
      {"all-star",
       "last time east won nba all star game",
       {"2014"},
       "2006",
       false,
       {"2004", "2001", "2001", "2013", "2013", "2013", "2013", "2004", "2013"},
       {1097.43212890625, 585.4111938476562, 355.2393798828125, 2.6302599906921387, 1.0910121140935217e-13,
        7.080334175945183e-14, 6.622470177493692e-14, 9.815065427076775e-15, 4.458403975289517e-16,
        3.7646645390169164e-30},
       2.731143238800789},
      {"vesta",
       "who was the temple of vesta built for?",
       {"Vesta"},
       "Vesta",
       true,
       {"Vesta", "the goddess vesta", "Vesta", "the goddess vesta", "the goddess vesta", "Vesta", "Vesta",
        "Vesta", "Vesta"},
       {1252.1671752929688, 372.3441772460938, 2.068291691343857e-13, 1.5302303423957858e-13,
        1.352673246172607e-14, 2.020799899278259e-29, 9.934199431454563e-30, 4.8484518987236446e-30, 0.0,
        0.0},
       1.7131135330533338},
      {"ww2",
       "what percentage of the world died in ww2?",
       {"about 3%"},
       "3%",
       true,
       std::vector<std::string>(9, "3%"),
       {1136.5360107421875, 3.5605334869695526e-13, 1.574521085343991e-14, 2.644209128265101e-29,
        1.6524366075384805e-30, 2.802596928649634e-45, 0.0, 0.0, 0.0, 0.0},
       1.0000000000000004},
  };
  return cases;
}

}  // namespace eruq::fixtures
