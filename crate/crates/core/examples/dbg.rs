use qtrack_core::pr_design::*;
fn main() {
    let a = PrComposition { delta0: true, k0: 47.218072792955375, resonant: vec![ResonantTerm{gain:33.780720920522334, omega:0.5}], first_order: vec![FirstOrderTerm{gain:1.220996367312099,pole:911.0859322085311}], second_order: vec![] };
    let b = PrComposition { delta0: false, k0: 0.0, resonant: vec![ResonantTerm{gain:41.76821326457513, omega:0.5}], first_order: vec![], second_order: vec![SecondOrderTerm{gain:32.44028067084933,zero:0.0,c:0.1,d:0.1}] };
    let (ha, hb) = (a.compose().unwrap(), b.compose().unwrap());
    println!("{ha}\n{hb}");
    let num = &(ha.numerator() * hb.denominator()) + &(hb.numerator() * ha.denominator());
    let den = ha.denominator() * hb.denominator();
    println!("num {num}\n {:?}", num.roots());
    println!("den {den}\n {:?}", den.roots());
}
