// Symmetric Gauss-type quadrature rules for the reference triangle
// (0,0)-(1,0)-(0,1), stored as [lambda1, lambda2, lambda3, weight] rows in
// barycentric coordinates. Weights sum to 1/2 (the reference area). All
// weights are positive and all points are strictly interior.
//
// Generated from the expanded polyquad rule files of Witherden & Vincent
// ("On the identification of symmetric quadrature rules for finite element
// methods", Comput. Math. Appl. 2015) by tools/gen_quadrature.py, which maps
// the biunit-triangle data to barycentric form and checks every rule against
// the closed form int x^a y^b = a! b! / (a+b+2)! before emitting it.

/// Symmetric rule exact to total degree 1 (1 point).
pub(super) const DEGREE_01: [[f64; 4]; 1] = [[
    3.33333333333333259e-01,
    3.33333333333333370e-01,
    3.33333333333333370e-01,
    5.00000000000000000e-01,
]];

/// Symmetric rule exact to total degree 2 (3 points).
pub(super) const DEGREE_02: [[f64; 4]; 3] = [
    [
        1.66666666666666630e-01,
        1.66666666666666685e-01,
        6.66666666666666630e-01,
        1.66666666666666657e-01,
    ],
    [
        1.66666666666666685e-01,
        6.66666666666666630e-01,
        1.66666666666666685e-01,
        1.66666666666666657e-01,
    ],
    [
        6.66666666666666519e-01,
        1.66666666666666685e-01,
        1.66666666666666685e-01,
        1.66666666666666657e-01,
    ],
];

/// Symmetric rule exact to total degree 4 (6 points).
pub(super) const DEGREE_04: [[f64; 4]; 6] = [
    [
        4.45948490915964890e-01,
        4.45948490915964890e-01,
        1.08103018168070220e-01,
        1.11690794839005736e-01,
    ],
    [
        4.45948490915964890e-01,
        1.08103018168070220e-01,
        4.45948490915964890e-01,
        1.11690794839005736e-01,
    ],
    [
        1.08103018168070220e-01,
        4.45948490915964890e-01,
        4.45948490915964890e-01,
        1.11690794839005736e-01,
    ],
    [
        9.15762135097707430e-02,
        9.15762135097707430e-02,
        8.16847572980458514e-01,
        5.49758718276609354e-02,
    ],
    [
        9.15762135097707430e-02,
        8.16847572980458514e-01,
        9.15762135097707430e-02,
        5.49758718276609354e-02,
    ],
    [
        8.16847572980458514e-01,
        9.15762135097707430e-02,
        9.15762135097707430e-02,
        5.49758718276609354e-02,
    ],
];

/// Symmetric rule exact to total degree 6 (12 points).
pub(super) const DEGREE_06: [[f64; 4]; 12] = [
    [
        6.30890144915022821e-02,
        6.30890144915022266e-02,
        8.73821971016995547e-01,
        2.54224531851034094e-02,
    ],
    [
        6.30890144915022266e-02,
        8.73821971016995547e-01,
        6.30890144915022266e-02,
        2.54224531851034094e-02,
    ],
    [
        8.73821971016995658e-01,
        6.30890144915022266e-02,
        6.30890144915022266e-02,
        2.54224531851034094e-02,
    ],
    [
        2.49286745170910429e-01,
        2.49286745170910429e-01,
        5.01426509658179143e-01,
        5.83931378631896841e-02,
    ],
    [
        2.49286745170910429e-01,
        5.01426509658179143e-01,
        2.49286745170910429e-01,
        5.83931378631896841e-02,
    ],
    [
        5.01426509658179143e-01,
        2.49286745170910429e-01,
        2.49286745170910429e-01,
        5.83931378631896841e-02,
    ],
    [
        3.10352451033784393e-01,
        5.31450498448169384e-02,
        6.36502499121398668e-01,
        4.14255378091867854e-02,
    ],
    [
        3.10352451033784393e-01,
        6.36502499121398668e-01,
        5.31450498448169384e-02,
        4.14255378091867854e-02,
    ],
    [
        5.31450498448169384e-02,
        3.10352451033784393e-01,
        6.36502499121398668e-01,
        4.14255378091867854e-02,
    ],
    [
        5.31450498448169384e-02,
        6.36502499121398668e-01,
        3.10352451033784393e-01,
        4.14255378091867854e-02,
    ],
    [
        6.36502499121398668e-01,
        3.10352451033784393e-01,
        5.31450498448169384e-02,
        4.14255378091867854e-02,
    ],
    [
        6.36502499121398668e-01,
        5.31450498448169384e-02,
        3.10352451033784393e-01,
        4.14255378091867854e-02,
    ],
];

/// Symmetric rule exact to total degree 8 (16 points).
pub(super) const DEGREE_08: [[f64; 4]; 16] = [
    [
        3.33333333333333259e-01,
        3.33333333333333370e-01,
        3.33333333333333370e-01,
        7.21578038388935861e-02,
    ],
    [
        4.59292588292723181e-01,
        4.59292588292723125e-01,
        8.14148234145536942e-02,
        4.75458171336423097e-02,
    ],
    [
        4.59292588292723125e-01,
        8.14148234145536942e-02,
        4.59292588292723125e-01,
        4.75458171336423097e-02,
    ],
    [
        8.14148234145537497e-02,
        4.59292588292723125e-01,
        4.59292588292723125e-01,
        4.75458171336423097e-02,
    ],
    [
        1.70569307751760157e-01,
        1.70569307751760213e-01,
        6.58861384496479574e-01,
        5.16086852673591223e-02,
    ],
    [
        1.70569307751760213e-01,
        6.58861384496479574e-01,
        1.70569307751760213e-01,
        5.16086852673591223e-02,
    ],
    [
        6.58861384496479463e-01,
        1.70569307751760213e-01,
        1.70569307751760213e-01,
        5.16086852673591223e-02,
    ],
    [
        5.05472283170309566e-02,
        5.05472283170309566e-02,
        8.98905543365938087e-01,
        1.62292488115990396e-02,
    ],
    [
        5.05472283170309566e-02,
        8.98905543365938087e-01,
        5.05472283170309566e-02,
        1.62292488115990396e-02,
    ],
    [
        8.98905543365938087e-01,
        5.05472283170309566e-02,
        5.05472283170309566e-02,
        1.62292488115990396e-02,
    ],
    [
        2.63112829634638223e-01,
        8.39477740995758781e-03,
        7.28492392955404244e-01,
        1.36151570872174964e-02,
    ],
    [
        2.63112829634638168e-01,
        7.28492392955404244e-01,
        8.39477740995758781e-03,
        1.36151570872174964e-02,
    ],
    [
        8.39477740995764332e-03,
        2.63112829634638112e-01,
        7.28492392955404244e-01,
        1.36151570872174964e-02,
    ],
    [
        8.39477740995764332e-03,
        7.28492392955404244e-01,
        2.63112829634638112e-01,
        1.36151570872174964e-02,
    ],
    [
        7.28492392955404355e-01,
        2.63112829634638112e-01,
        8.39477740995758781e-03,
        1.36151570872174964e-02,
    ],
    [
        7.28492392955404355e-01,
        8.39477740995758781e-03,
        2.63112829634638112e-01,
        1.36151570872174964e-02,
    ],
];

/// Symmetric rule exact to total degree 12 (33 points).
pub(super) const DEGREE_12: [[f64; 4]; 33] = [
    [
        4.88203750945541637e-01,
        4.88203750945541526e-01,
        2.35924981089168928e-02,
        1.21334190407260158e-02,
    ],
    [
        4.88203750945541637e-01,
        2.35924981089168928e-02,
        4.88203750945541526e-01,
        1.21334190407260158e-02,
    ],
    [
        2.35924981089170038e-02,
        4.88203750945541526e-01,
        4.88203750945541526e-01,
        1.21334190407260158e-02,
    ],
    [
        1.09257827659354323e-01,
        1.09257827659354267e-01,
        7.81484344681291354e-01,
        1.42430260344387719e-02,
    ],
    [
        1.09257827659354378e-01,
        7.81484344681291354e-01,
        1.09257827659354267e-01,
        1.42430260344387719e-02,
    ],
    [
        7.81484344681291354e-01,
        1.09257827659354267e-01,
        1.09257827659354267e-01,
        1.42430260344387719e-02,
    ],
    [
        2.71462507014926024e-01,
        2.71462507014926080e-01,
        4.57074985970147840e-01,
        3.12706065979513823e-02,
    ],
    [
        2.71462507014926080e-01,
        4.57074985970147840e-01,
        2.71462507014926080e-01,
        3.12706065979513823e-02,
    ],
    [
        4.57074985970147785e-01,
        2.71462507014926080e-01,
        2.71462507014926080e-01,
        3.12706065979513823e-02,
    ],
    [
        2.46463634363355277e-02,
        2.46463634363355832e-02,
        9.50707273127328834e-01,
        3.96582125498681944e-03,
    ],
    [
        2.46463634363355832e-02,
        9.50707273127328834e-01,
        2.46463634363355832e-02,
        3.96582125498681944e-03,
    ],
    [
        9.50707273127328722e-01,
        2.46463634363355832e-02,
        2.46463634363355832e-02,
        3.96582125498681944e-03,
    ],
    [
        4.40111648658593146e-01,
        4.40111648658593091e-01,
        1.19776702682813763e-01,
        2.49591674640304712e-02,
    ],
    [
        4.40111648658593091e-01,
        1.19776702682813763e-01,
        4.40111648658593091e-01,
        2.49591674640304712e-02,
    ],
    [
        1.19776702682813818e-01,
        4.40111648658593091e-01,
        4.40111648658593091e-01,
        2.49591674640304712e-02,
    ],
    [
        2.30341563552671769e-02,
        2.91655679738340945e-01,
        6.85310163906391878e-01,
        1.08917925193037796e-02,
    ],
    [
        2.30341563552671769e-02,
        6.85310163906391878e-01,
        2.91655679738340945e-01,
        1.08917925193037796e-02,
    ],
    [
        2.91655679738340945e-01,
        2.30341563552671214e-02,
        6.85310163906391878e-01,
        1.08917925193037796e-02,
    ],
    [
        2.91655679738341000e-01,
        6.85310163906391878e-01,
        2.30341563552671214e-02,
        1.08917925193037796e-02,
    ],
    [
        6.85310163906391878e-01,
        2.30341563552671214e-02,
        2.91655679738340945e-01,
        1.08917925193037796e-02,
    ],
    [
        6.85310163906391878e-01,
        2.91655679738340945e-01,
        2.30341563552671214e-02,
        1.08917925193037796e-02,
    ],
    [
        2.55454228638517300e-01,
        1.16296019677926576e-01,
        6.28249751683556124e-01,
        2.16136818297071043e-02,
    ],
    [
        2.55454228638517300e-01,
        6.28249751683556124e-01,
        1.16296019677926576e-01,
        2.16136818297071043e-02,
    ],
    [
        1.16296019677926576e-01,
        2.55454228638517356e-01,
        6.28249751683556124e-01,
        2.16136818297071043e-02,
    ],
    [
        1.16296019677926521e-01,
        6.28249751683556124e-01,
        2.55454228638517356e-01,
        2.16136818297071043e-02,
    ],
    [
        6.28249751683556124e-01,
        2.55454228638517356e-01,
        1.16296019677926576e-01,
        2.16136818297071043e-02,
    ],
    [
        6.28249751683556124e-01,
        1.16296019677926576e-01,
        2.55454228638517356e-01,
        2.16136818297071043e-02,
    ],
    [
        2.13824902561705055e-02,
        8.51337792510240110e-01,
        1.27279717233589384e-01,
        7.54183878825571887e-03,
    ],
    [
        2.13824902561705610e-02,
        1.27279717233589384e-01,
        8.51337792510240110e-01,
        7.54183878825571887e-03,
    ],
    [
        8.51337792510240110e-01,
        2.13824902561706165e-02,
        1.27279717233589384e-01,
        7.54183878825571887e-03,
    ],
    [
        8.51337792510240110e-01,
        1.27279717233589384e-01,
        2.13824902561706165e-02,
        7.54183878825571887e-03,
    ],
    [
        1.27279717233589329e-01,
        2.13824902561706165e-02,
        8.51337792510240110e-01,
        7.54183878825571887e-03,
    ],
    [
        1.27279717233589273e-01,
        8.51337792510240110e-01,
        2.13824902561706165e-02,
        7.54183878825571887e-03,
    ],
];

/// Symmetric rule exact to total degree 19 (73 points).
pub(super) const DEGREE_19: [[f64; 4]; 73] = [
    [
        3.33333333333333259e-01,
        3.33333333333333370e-01,
        3.33333333333333370e-01,
        1.72346988520061667e-02,
    ],
    [
        5.25238903512089683e-02,
        5.25238903512089683e-02,
        8.94952219297582063e-01,
        3.55462829889906544e-03,
    ],
    [
        5.25238903512089683e-02,
        8.94952219297582063e-01,
        5.25238903512089683e-02,
        3.55462829889906544e-03,
    ],
    [
        8.94952219297582063e-01,
        5.25238903512089683e-02,
        5.25238903512089683e-02,
        3.55462829889906544e-03,
    ],
    [
        4.92512675041336834e-01,
        4.92512675041336889e-01,
        1.49746499173262770e-02,
        5.16087757147214079e-03,
    ],
    [
        4.92512675041336889e-01,
        1.49746499173262770e-02,
        4.92512675041336889e-01,
        5.16087757147214079e-03,
    ],
    [
        1.49746499173262215e-02,
        4.92512675041336889e-01,
        4.92512675041336889e-01,
        5.16087757147214079e-03,
    ],
    [
        1.11448873323021225e-01,
        1.11448873323021391e-01,
        7.77102253353957328e-01,
        7.61717554650914990e-03,
    ],
    [
        1.11448873323021280e-01,
        7.77102253353957328e-01,
        1.11448873323021391e-01,
        7.61717554650914990e-03,
    ],
    [
        7.77102253353957106e-01,
        1.11448873323021391e-01,
        1.11448873323021391e-01,
        7.61717554650914990e-03,
    ],
    [
        4.59194201039543670e-01,
        4.59194201039543670e-01,
        8.16115979209126596e-02,
        1.14917950133708036e-02,
    ],
    [
        4.59194201039543670e-01,
        8.16115979209126596e-02,
        4.59194201039543670e-01,
        1.14917950133708036e-02,
    ],
    [
        8.16115979209126596e-02,
        4.59194201039543670e-01,
        4.59194201039543670e-01,
        1.14917950133708036e-02,
    ],
    [
        4.03969722551901167e-01,
        4.03969722551901222e-01,
        1.92060554896197611e-01,
        1.57687674465774863e-02,
    ],
    [
        4.03969722551901222e-01,
        1.92060554896197611e-01,
        4.03969722551901222e-01,
        1.57687674465774863e-02,
    ],
    [
        1.92060554896197555e-01,
        4.03969722551901222e-01,
        4.03969722551901222e-01,
        1.57687674465774863e-02,
    ],
    [
        1.78170104781764316e-01,
        1.78170104781764316e-01,
        6.43659790436471368e-01,
        1.23259574240954274e-02,
    ],
    [
        1.78170104781764316e-01,
        6.43659790436471368e-01,
        1.78170104781764316e-01,
        1.23259574240954274e-02,
    ],
    [
        6.43659790436471368e-01,
        1.78170104781764316e-01,
        1.78170104781764316e-01,
        1.23259574240954274e-02,
    ],
    [
        1.16394611837894457e-02,
        1.16394611837894457e-02,
        9.76721077632421109e-01,
        8.82661388221423837e-04,
    ],
    [
        1.16394611837894457e-02,
        9.76721077632421109e-01,
        1.16394611837894457e-02,
        8.82661388221423837e-04,
    ],
    [
        9.76721077632421109e-01,
        1.16394611837894457e-02,
        1.16394611837894457e-02,
        8.82661388221423837e-04,
    ],
    [
        2.55161632913607661e-01,
        2.55161632913607717e-01,
        4.89676734172784622e-01,
        1.58765096830015377e-02,
    ],
    [
        2.55161632913607717e-01,
        4.89676734172784622e-01,
        2.55161632913607717e-01,
        1.58765096830015377e-02,
    ],
    [
        4.89676734172784567e-01,
        2.55161632913607717e-01,
        2.55161632913607717e-01,
        1.58765096830015377e-02,
    ],
    [
        3.91458593316922343e-02,
        1.30697676268032414e-01,
        8.30156464400275351e-01,
        4.84774224342752330e-03,
    ],
    [
        3.91458593316922343e-02,
        8.30156464400275351e-01,
        1.30697676268032414e-01,
        4.84774224342752330e-03,
    ],
    [
        1.30697676268032414e-01,
        3.91458593316922343e-02,
        8.30156464400275351e-01,
        4.84774224342752330e-03,
    ],
    [
        1.30697676268032414e-01,
        8.30156464400275351e-01,
        3.91458593316922343e-02,
        4.84774224342752330e-03,
    ],
    [
        8.30156464400275351e-01,
        3.91458593316922343e-02,
        1.30697676268032414e-01,
        4.84774224342752330e-03,
    ],
    [
        8.30156464400275351e-01,
        1.30697676268032414e-01,
        3.91458593316922343e-02,
        4.84774224342752330e-03,
    ],
    [
        1.29312564470157820e-01,
        3.11317629809541252e-01,
        5.59369805720300928e-01,
        1.31731609886953666e-02,
    ],
    [
        1.29312564470157820e-01,
        5.59369805720300928e-01,
        3.11317629809541252e-01,
        1.31731609886953666e-02,
    ],
    [
        3.11317629809541252e-01,
        1.29312564470157820e-01,
        5.59369805720300928e-01,
        1.31731609886953666e-02,
    ],
    [
        3.11317629809541252e-01,
        5.59369805720300928e-01,
        1.29312564470157820e-01,
        1.31731609886953666e-02,
    ],
    [
        5.59369805720300928e-01,
        1.29312564470157820e-01,
        3.11317629809541252e-01,
        1.31731609886953666e-02,
    ],
    [
        5.59369805720300928e-01,
        3.11317629809541252e-01,
        1.29312564470157820e-01,
        1.31731609886953666e-02,
    ],
    [
        3.64617780974611061e-01,
        2.06892589660478965e-03,
        6.33313293128784149e-01,
        1.64103827591790966e-03,
    ],
    [
        3.64617780974611061e-01,
        6.33313293128784149e-01,
        2.06892589660478965e-03,
        1.64103827591790966e-03,
    ],
    [
        2.06892589660478965e-03,
        3.64617780974611061e-01,
        6.33313293128784149e-01,
        1.64103827591790966e-03,
    ],
    [
        2.06892589660478965e-03,
        6.33313293128784149e-01,
        3.64617780974611061e-01,
        1.64103827591790966e-03,
    ],
    [
        6.33313293128784149e-01,
        3.64617780974611061e-01,
        2.06892589660478965e-03,
        1.64103827591790966e-03,
    ],
    [
        6.33313293128784149e-01,
        2.06892589660478965e-03,
        3.64617780974611061e-01,
        1.64103827591790966e-03,
    ],
    [
        2.21434885432331252e-01,
        7.45602946016266643e-02,
        7.04004819966042139e-01,
        9.05397246560622586e-03,
    ],
    [
        2.21434885432331197e-01,
        7.04004819966042139e-01,
        7.45602946016266643e-02,
        9.05397246560622586e-03,
    ],
    [
        7.45602946016267198e-02,
        2.21434885432331197e-01,
        7.04004819966042139e-01,
        9.05397246560622586e-03,
    ],
    [
        7.45602946016266643e-02,
        7.04004819966042139e-01,
        2.21434885432331197e-01,
        9.05397246560622586e-03,
    ],
    [
        7.04004819966042250e-01,
        2.21434885432331197e-01,
        7.45602946016266643e-02,
        9.05397246560622586e-03,
    ],
    [
        7.04004819966042250e-01,
        7.45602946016266643e-02,
        2.21434885432331197e-01,
        9.05397246560622586e-03,
    ],
    [
        1.42425757365756356e-01,
        5.00728825735446970e-03,
        8.52566954376889230e-01,
        1.46315755173510018e-03,
    ],
    [
        1.42425757365756300e-01,
        8.52566954376889230e-01,
        5.00728825735446970e-03,
        1.46315755173510018e-03,
    ],
    [
        5.00728825735441418e-03,
        1.42425757365756300e-01,
        8.52566954376889230e-01,
        1.46315755173510018e-03,
    ],
    [
        5.00728825735446970e-03,
        8.52566954376889230e-01,
        1.42425757365756300e-01,
        1.46315755173510018e-03,
    ],
    [
        8.52566954376889230e-01,
        1.42425757365756300e-01,
        5.00728825735446970e-03,
        1.46315755173510018e-03,
    ],
    [
        8.52566954376889230e-01,
        5.00728825735446970e-03,
        1.42425757365756300e-01,
        1.46315755173510018e-03,
    ],
    [
        3.54028009735275262e-01,
        4.08880111960168713e-02,
        6.05083979068707922e-01,
        8.05108138201205380e-03,
    ],
    [
        3.54028009735275206e-01,
        6.05083979068707922e-01,
        4.08880111960168713e-02,
        8.05108138201205380e-03,
    ],
    [
        4.08880111960169268e-02,
        3.54028009735275151e-01,
        6.05083979068707922e-01,
        8.05108138201205380e-03,
    ],
    [
        4.08880111960169268e-02,
        6.05083979068707922e-01,
        3.54028009735275151e-01,
        8.05108138201205380e-03,
    ],
    [
        6.05083979068707922e-01,
        3.54028009735275151e-01,
        4.08880111960168713e-02,
        8.05108138201205380e-03,
    ],
    [
        6.05083979068708033e-01,
        4.08880111960168713e-02,
        3.54028009735275151e-01,
        8.05108138201205380e-03,
    ],
    [
        1.49240520819841072e-02,
        2.41894578960579587e-01,
        7.43181368957436361e-01,
        4.22794374976824799e-03,
    ],
    [
        1.49240520819840516e-02,
        7.43181368957436361e-01,
        2.41894578960579587e-01,
        4.22794374976824799e-03,
    ],
    [
        2.41894578960579643e-01,
        1.49240520819840516e-02,
        7.43181368957436361e-01,
        4.22794374976824799e-03,
    ],
    [
        2.41894578960579587e-01,
        7.43181368957436361e-01,
        1.49240520819840516e-02,
        4.22794374976824799e-03,
    ],
    [
        7.43181368957436472e-01,
        1.49240520819840516e-02,
        2.41894578960579587e-01,
        4.22794374976824799e-03,
    ],
    [
        7.43181368957436472e-01,
        2.41894578960579587e-01,
        1.49240520819840516e-02,
        4.22794374976824799e-03,
    ],
    [
        9.77602580088821060e-03,
        6.00862753223067037e-02,
        9.30137698876805086e-01,
        1.66360068142969403e-03,
    ],
    [
        9.77602580088821060e-03,
        9.30137698876805086e-01,
        6.00862753223067037e-02,
        1.66360068142969403e-03,
    ],
    [
        6.00862753223068147e-02,
        9.77602580088815509e-03,
        9.30137698876805086e-01,
        1.66360068142969403e-03,
    ],
    [
        6.00862753223067592e-02,
        9.30137698876805086e-01,
        9.77602580088815509e-03,
        1.66360068142969403e-03,
    ],
    [
        9.30137698876805197e-01,
        9.77602580088815509e-03,
        6.00862753223067037e-02,
        1.66360068142969403e-03,
    ],
    [
        9.30137698876805086e-01,
        6.00862753223067037e-02,
        9.77602580088815509e-03,
        1.66360068142969403e-03,
    ],
];
